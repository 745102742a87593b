#pragma once

// In-memory model and CSV I/O for the three ComVE subtask data shapes.
//
// File formats (UTF-8, comma-delimited, double-quote quoting, header row):
//   pairs data:       id,sent0,sent1        answers: id,label   label in {0,1}
//   choices data:     id,statement,option0,option1,option2
//                                           answers: id,label   label in {0,1,2}
//   generation data:  id,statement          references: id,ref0,ref1,ref2
//
// Text fields are trimmed on load; interior whitespace is preserved.
// Loaded datasets are immutable by convention and safe for concurrent reads.

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "comve/csv.hpp"
#include "comve/errors.hpp"
#include "comve/util.hpp"

namespace comve {

struct PairExample {
  std::string id;
  std::string sent0;
  std::string sent1;
  std::optional<int> label;  // index of the statement against common sense
  bool operator==(const PairExample&) const = default;
};

struct ChoiceExample {
  std::string id;
  std::string statement;  // the nonsensical statement
  std::array<std::string, 3> options;
  std::optional<int> label;  // index of the correct explanation
  bool operator==(const ChoiceExample&) const = default;
};

struct GenerationExample {
  std::string id;
  std::string statement;
  std::vector<std::string> references;  // 1 to 3, non-empty
  bool operator==(const GenerationExample&) const = default;
};

template <typename T>
class Dataset {
 public:
  void add(T example) {
    if (example.id.empty())
      throw validation_error("example with empty id");
    if (index_.contains(example.id))
      throw validation_error("duplicate id: " + example.id);
    index_.emplace(example.id, examples_.size());
    examples_.push_back(std::move(example));
  }

  const std::vector<T>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  bool contains(const std::string& id) const { return index_.contains(id); }

  const T& at(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end())
      throw validation_error("unknown id: " + id);
    return examples_[it->second];
  }

  bool operator==(const Dataset& other) const {
    return examples_ == other.examples_;
  }

 private:
  std::vector<T> examples_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<csv::Record> read_table(const std::filesystem::path& path,
                                           std::span<const std::string> header,
                                           std::size_t columns) {
  auto records = csv::read_file(path);
  const std::string origin = path.filename().string();
  if (records.empty())
    throw validation_error(origin + ": empty file, header row required");
  if (records.front().fields !=
      std::vector<std::string>(header.begin(), header.end()))
    throw validation_error(origin + ":1: expected header '" +
                           util::join(header, ",") + "', got '" +
                           util::join(records.front().fields, ",") + "'");
  records.erase(records.begin());
  for (const auto& rec : records)
    if (rec.fields.size() != columns)
      throw validation_error(origin + ":" + std::to_string(rec.line) +
                             ": expected " + std::to_string(columns) +
                             " fields, got " +
                             std::to_string(rec.fields.size()));
  return records;
}

// Applies an `id,label` answers file onto already-parsed example rows.
template <typename T>
void apply_answers(std::vector<T>& rows, const std::filesystem::path& path,
                   int max_label) {
  static const std::vector<std::string> kHeader = {"id", "label"};
  const std::string origin = path.filename().string();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < rows.size(); ++i) index.emplace(rows[i].id, i);

  std::unordered_map<std::string, int> labels;
  for (const auto& rec : read_table(path, kHeader, 2)) {
    const std::string id = util::trim(rec.fields[0]);
    const std::string where = origin + ":" + std::to_string(rec.line);
    const long label = util::parse_long(rec.fields[1], where + " label");
    if (!index.contains(id))
      throw validation_error(where + ": answer id '" + id +
                             "' has no matching data id");
    if (label < 0 || label > max_label)
      throw validation_error(where + ": id '" + id + "' has illegal label " +
                             std::to_string(label) + " (allowed 0.." +
                             std::to_string(max_label) + ")");
    if (!labels.emplace(id, static_cast<int>(label)).second)
      throw validation_error(where + ": duplicate id: " + id);
  }
  for (auto& ex : rows) {
    const auto it = labels.find(ex.id);
    if (it == labels.end())
      throw validation_error(origin + ": no answer for id '" + ex.id + "'");
    ex.label = it->second;
  }
}

template <typename T>
Dataset<T> into_dataset(std::vector<T>&& rows) {
  Dataset<T> ds;
  for (auto& ex : rows) ds.add(std::move(ex));
  return ds;
}

inline void check_unique(std::unordered_map<std::string, std::size_t>& seen,
                         const std::string& id, const std::string& where) {
  if (!seen.emplace(id, seen.size()).second)
    throw validation_error(where + ": duplicate id: " + id);
}

}  // namespace detail

inline Dataset<PairExample> load_pairs(
    const std::filesystem::path& path,
    const std::optional<std::filesystem::path>& answers_path = {}) {
  static const std::vector<std::string> kHeader = {"id", "sent0", "sent1"};
  const std::string origin = path.filename().string();
  std::vector<PairExample> rows;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& rec : detail::read_table(path, kHeader, 3)) {
    const std::string where = origin + ":" + std::to_string(rec.line);
    PairExample ex;
    ex.id = util::trim(rec.fields[0]);
    ex.sent0 = util::trim(rec.fields[1]);
    ex.sent1 = util::trim(rec.fields[2]);
    if (ex.id.empty()) throw validation_error(where + ": empty id");
    if (ex.sent0.empty() || ex.sent1.empty())
      throw validation_error(where + ": empty sentence in id '" + ex.id + "'");
    detail::check_unique(seen, ex.id, where);
    rows.push_back(std::move(ex));
  }
  if (answers_path) detail::apply_answers(rows, *answers_path, 1);
  return detail::into_dataset(std::move(rows));
}

inline Dataset<ChoiceExample> load_choices(
    const std::filesystem::path& path,
    const std::optional<std::filesystem::path>& answers_path = {}) {
  static const std::vector<std::string> kHeader = {"id", "statement",
                                                   "option0", "option1",
                                                   "option2"};
  const std::string origin = path.filename().string();
  std::vector<ChoiceExample> rows;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& rec : detail::read_table(path, kHeader, 5)) {
    const std::string where = origin + ":" + std::to_string(rec.line);
    ChoiceExample ex;
    ex.id = util::trim(rec.fields[0]);
    ex.statement = util::trim(rec.fields[1]);
    for (int i = 0; i < 3; ++i) ex.options[i] = util::trim(rec.fields[2 + i]);
    if (ex.id.empty()) throw validation_error(where + ": empty id");
    if (ex.statement.empty())
      throw validation_error(where + ": empty statement in id '" + ex.id +
                             "'");
    for (int i = 0; i < 3; ++i)
      if (ex.options[i].empty())
        throw validation_error(where + ": empty option" + std::to_string(i) +
                               " in id '" + ex.id + "'");
    detail::check_unique(seen, ex.id, where);
    rows.push_back(std::move(ex));
  }
  if (answers_path) detail::apply_answers(rows, *answers_path, 2);
  return detail::into_dataset(std::move(rows));
}

inline Dataset<GenerationExample> load_generation(
    const std::filesystem::path& path,
    const std::filesystem::path& refs_path) {
  static const std::vector<std::string> kDataHeader = {"id", "statement"};
  static const std::vector<std::string> kRefsHeader = {"id", "ref0", "ref1",
                                                       "ref2"};
  const std::string origin = path.filename().string();
  const std::string refs_origin = refs_path.filename().string();

  std::vector<GenerationExample> rows;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& rec : detail::read_table(path, kDataHeader, 2)) {
    const std::string where = origin + ":" + std::to_string(rec.line);
    GenerationExample ex;
    ex.id = util::trim(rec.fields[0]);
    ex.statement = util::trim(rec.fields[1]);
    if (ex.id.empty()) throw validation_error(where + ": empty id");
    if (ex.statement.empty())
      throw validation_error(where + ": empty statement in id '" + ex.id +
                             "'");
    detail::check_unique(seen, ex.id, where);
    rows.push_back(std::move(ex));
  }

  std::unordered_map<std::string, std::vector<std::string>> refs;
  for (const auto& rec : detail::read_table(refs_path, kRefsHeader, 4)) {
    const std::string id = util::trim(rec.fields[0]);
    const std::string where = refs_origin + ":" + std::to_string(rec.line);
    if (!seen.contains(id))
      throw validation_error(where + ": reference id '" + id +
                             "' has no matching data id");
    if (refs.contains(id))
      throw validation_error(where + ": duplicate id: " + id);
    std::vector<std::string> rs;
    for (int i = 1; i <= 3; ++i) {
      std::string r = util::trim(rec.fields[i]);
      if (!r.empty()) rs.push_back(std::move(r));  // empty slots are dropped
    }
    if (rs.empty())
      throw validation_error(where + ": id '" + id + "' has zero references");
    refs.emplace(id, std::move(rs));
  }
  for (auto& ex : rows) {
    const auto it = refs.find(ex.id);
    if (it == refs.end())
      throw validation_error(refs_origin + ": id '" + ex.id +
                             "' has zero references");
    ex.references = it->second;
  }
  return detail::into_dataset(std::move(rows));
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw validation_error("cannot write file: " + path.string());
  return out;
}

template <typename T>
void write_answers(const Dataset<T>& ds, const std::filesystem::path& path) {
  auto out = open_out(path);
  csv::write_row(out, std::vector<std::string>{"id", "label"});
  for (const auto& ex : ds.examples()) {
    if (!ex.label)
      throw validation_error("cannot write answers: id '" + ex.id +
                             "' is unlabeled");
    csv::write_row(out,
                   std::vector<std::string>{ex.id, std::to_string(*ex.label)});
  }
}

}  // namespace detail

inline void write_pairs(
    const Dataset<PairExample>& ds, const std::filesystem::path& data_path,
    const std::optional<std::filesystem::path>& answers_path = {}) {
  auto out = detail::open_out(data_path);
  csv::write_row(out, std::vector<std::string>{"id", "sent0", "sent1"});
  for (const auto& ex : ds.examples())
    csv::write_row(out, std::vector<std::string>{ex.id, ex.sent0, ex.sent1});
  if (answers_path) detail::write_answers(ds, *answers_path);
}

inline void write_choices(
    const Dataset<ChoiceExample>& ds, const std::filesystem::path& data_path,
    const std::optional<std::filesystem::path>& answers_path = {}) {
  auto out = detail::open_out(data_path);
  csv::write_row(out, std::vector<std::string>{"id", "statement", "option0",
                                               "option1", "option2"});
  for (const auto& ex : ds.examples())
    csv::write_row(out, std::vector<std::string>{ex.id, ex.statement,
                                                 ex.options[0], ex.options[1],
                                                 ex.options[2]});
  if (answers_path) detail::write_answers(ds, *answers_path);
}

inline void write_generation(const Dataset<GenerationExample>& ds,
                             const std::filesystem::path& data_path,
                             const std::filesystem::path& refs_path) {
  auto out = detail::open_out(data_path);
  csv::write_row(out, std::vector<std::string>{"id", "statement"});
  for (const auto& ex : ds.examples())
    csv::write_row(out, std::vector<std::string>{ex.id, ex.statement});
  auto refs_out = detail::open_out(refs_path);
  csv::write_row(refs_out,
                 std::vector<std::string>{"id", "ref0", "ref1", "ref2"});
  for (const auto& ex : ds.examples()) {
    std::vector<std::string> row{ex.id, "", "", ""};
    for (std::size_t i = 0; i < ex.references.size() && i < 3; ++i)
      row[1 + i] = ex.references[i];
    csv::write_row(refs_out, row);
  }
}

// Fraction of examples per label; requires every example to be labeled.
template <typename T>
std::map<int, double> label_distribution(const Dataset<T>& ds) {
  if (ds.empty()) throw validation_error("label_distribution: empty dataset");
  std::map<int, long> counts;
  for (const auto& ex : ds.examples()) {
    if (!ex.label)
      throw validation_error("unlabeled example: " + ex.id);
    ++counts[*ex.label];
  }
  std::map<int, double> fractions;
  for (const auto& [label, count] : counts)
    fractions[label] =
        static_cast<double>(count) / static_cast<double>(ds.size());
  return fractions;
}

}  // namespace comve
