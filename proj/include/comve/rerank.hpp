#pragma once

// Cross-task reranking: competing systems' generated explanations are
// assembled into choice instances, an external scorer picks one per
// example, and the pick quality is summarized as per-system selection
// shares, the mean human score of the picks, and the oracle upper bound.
//
// File formats (JSON Lines unless noted):
//   system output:    {"id": "<string>", "text": "<string>"}
//   candidate scores: {"id": "<string>", "scores": [s0, s1, s2],
//                      "direction": "higher"|"lower"}   (direction constant)
//   human scores:     CSV  id,system,score   with score in [0,3]

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "comve/csv.hpp"
#include "comve/dataset.hpp"
#include "comve/errors.hpp"
#include "comve/jsonl.hpp"

namespace comve {

class SystemOutput {
 public:
  explicit SystemOutput(std::string system_id)
      : system_id_(std::move(system_id)) {}

  void add(const std::string& id, std::string text) {
    if (id.empty()) throw validation_error("system output with empty id");
    if (text.empty())
      throw validation_error("empty explanation for id '" + id + "'");
    if (!texts_.emplace(id, std::move(text)).second)
      throw validation_error("duplicate id: " + id);
  }

  const std::string& system_id() const { return system_id_; }
  std::size_t size() const { return texts_.size(); }

  const std::string* find(const std::string& id) const {
    const auto it = texts_.find(id);
    return it == texts_.end() ? nullptr : &it->second;
  }

 private:
  std::string system_id_;
  std::unordered_map<std::string, std::string> texts_;
};

inline SystemOutput load_system_output(const std::filesystem::path& path) {
  const std::string origin = path.filename().string();
  SystemOutput out(path.stem().string());
  jsonl::for_each_record(path, [&](std::size_t line, const jsonl::json& rec) {
    try {
      out.add(jsonl::field<std::string>(rec, "id", origin, line),
              jsonl::field<std::string>(rec, "text", origin, line));
    } catch (const validation_error& e) {
      throw validation_error(origin + ":" + std::to_string(line) + ": " +
                             e.what());
    }
  });
  return out;
}

enum class ScoreDirection { higher_better, lower_better };

class CandidateScores {
 public:
  CandidateScores(std::size_t width, ScoreDirection direction)
      : width_(width), direction_(direction) {
    if (width_ < 2 || width_ > 3)
      throw validation_error("candidate scores need 2 or 3 columns, got " +
                             std::to_string(width_));
  }

  void add_row(const std::string& id, std::vector<double> scores) {
    if (id.empty()) throw validation_error("score row with empty id");
    if (scores.size() != width_)
      throw validation_error("id '" + id + "': expected " +
                             std::to_string(width_) + " scores, got " +
                             std::to_string(scores.size()));
    for (const double s : scores)
      if (!std::isfinite(s))
        throw validation_error("id '" + id + "': non-finite score");
    if (index_.contains(id))
      throw validation_error("duplicate id: " + id);
    index_.emplace(id, rows_.size());
    rows_.emplace_back(id, std::move(scores));
  }

  std::size_t width() const { return width_; }
  ScoreDirection direction() const { return direction_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<std::pair<std::string, std::vector<double>>>& rows()
      const {
    return rows_;
  }

  const std::vector<double>* find(const std::string& id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &rows_[it->second].second;
  }

 private:
  std::size_t width_;
  ScoreDirection direction_;
  std::vector<std::pair<std::string, std::vector<double>>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline CandidateScores load_candidate_scores(
    const std::filesystem::path& path) {
  const std::string origin = path.filename().string();
  std::optional<CandidateScores> table;
  jsonl::for_each_record(path, [&](std::size_t line, const jsonl::json& rec) {
    const auto id = jsonl::field<std::string>(rec, "id", origin, line);
    auto scores = jsonl::field<std::vector<double>>(rec, "scores", origin, line);
    const auto dir = jsonl::field<std::string>(rec, "direction", origin, line);
    ScoreDirection direction;
    if (dir == "higher") {
      direction = ScoreDirection::higher_better;
    } else if (dir == "lower") {
      direction = ScoreDirection::lower_better;
    } else {
      throw validation_error(origin + ":" + std::to_string(line) +
                             ": direction must be 'higher' or 'lower'");
    }
    if (!table) {
      table.emplace(scores.size(), direction);
    } else if (direction != table->direction()) {
      throw validation_error(origin + ":" + std::to_string(line) +
                             ": direction changed mid-file");
    }
    try {
      table->add_row(id, std::move(scores));
    } catch (const validation_error& e) {
      throw validation_error(origin + ":" + std::to_string(line) + ": " +
                             e.what());
    }
  });
  if (!table)
    throw validation_error(origin + ": no score records");
  return *std::move(table);
}

class HumanScoreTable {
 public:
  void add(const std::string& id, const std::string& system, double score) {
    if (!(score >= 0.0 && score <= 3.0))
      throw validation_error("human score " + std::to_string(score) +
                             " for (" + id + ", " + system +
                             ") outside [0,3]");
    if (!rows_.emplace(std::make_pair(id, system), score).second)
      throw validation_error("duplicate human score for (" + id + ", " +
                             system + ")");
  }

  std::size_t size() const { return rows_.size(); }

  const double* find(const std::string& id, const std::string& system) const {
    const auto it = rows_.find(std::make_pair(id, system));
    return it == rows_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::pair<std::string, std::string>, double> rows_;
};

inline HumanScoreTable load_human_scores(const std::filesystem::path& path) {
  static const std::vector<std::string> kHeader = {"id", "system", "score"};
  const std::string origin = path.filename().string();
  HumanScoreTable table;
  for (const auto& rec : detail::read_table(path, kHeader, 3)) {
    const std::string where = origin + ":" + std::to_string(rec.line);
    try {
      table.add(util::trim(rec.fields[0]), util::trim(rec.fields[1]),
                util::parse_double(rec.fields[2], where + " score"));
    } catch (const validation_error& e) {
      throw validation_error(where + ": " + e.what());
    }
  }
  return table;
}

// The sentinel text filling the unused third option when only two systems
// compete; it never receives a score and can never be selected.
inline constexpr const char* kUnusedOption = "<unused>";

// One ChoiceExample per statement, options in declared system order.
inline Dataset<ChoiceExample> build_choice_instances(
    const Dataset<GenerationExample>& statements,
    std::span<const SystemOutput> systems) {
  if (systems.size() < 2 || systems.size() > 3)
    throw validation_error("need 2 or 3 systems, got " +
                           std::to_string(systems.size()));
  Dataset<ChoiceExample> instances;
  for (const auto& ex : statements.examples()) {
    ChoiceExample inst;
    inst.id = ex.id;
    inst.statement = ex.statement;
    for (std::size_t s = 0; s < 3; ++s) {
      if (s >= systems.size()) {
        inst.options[s] = kUnusedOption;
        continue;
      }
      const std::string* text = systems[s].find(ex.id);
      if (!text)
        throw validation_error("system '" + systems[s].system_id() +
                               "' is missing id '" + ex.id + "'");
      inst.options[s] = *text;
    }
    instances.add(std::move(inst));
  }
  return instances;
}

struct Selections {
  std::vector<std::string> system_ids;  // declared order
  struct Entry {
    std::string id;
    std::size_t system_index;
    std::string text;
  };
  std::vector<Entry> entries;  // instance order
};

// Per id, the best-scoring option (argmax for higher_better, argmin for
// lower_better); ties go to the lowest index. Only the first
// system_ids.size() options are real candidates.
inline Selections select_best(const Dataset<ChoiceExample>& instances,
                              const CandidateScores& scores,
                              std::vector<std::string> system_ids) {
  if (system_ids.size() != scores.width())
    throw validation_error("score width " + std::to_string(scores.width()) +
                           " does not match " +
                           std::to_string(system_ids.size()) + " systems");
  if (instances.size() != scores.size())
    throw validation_error("instances cover " +
                           std::to_string(instances.size()) +
                           " ids, scores cover " +
                           std::to_string(scores.size()));
  Selections out;
  out.system_ids = std::move(system_ids);
  for (const auto& inst : instances.examples()) {
    const std::vector<double>* row = scores.find(inst.id);
    if (!row)
      throw validation_error("no scores for id '" + inst.id + "'");
    std::size_t best = 0;
    for (std::size_t i = 1; i < row->size(); ++i) {
      const bool better = scores.direction() == ScoreDirection::higher_better
                              ? (*row)[i] > (*row)[best]
                              : (*row)[i] < (*row)[best];
      if (better) best = i;
    }
    out.entries.push_back({inst.id, best, inst.options[best]});
  }
  return out;
}

// Fraction of examples in which each system's output was selected.
inline std::vector<double> selection_shares(const Selections& selections) {
  if (selections.entries.empty())
    throw validation_error("selection_shares: empty selections");
  std::vector<double> shares(selections.system_ids.size(), 0.0);
  for (const auto& e : selections.entries) ++shares.at(e.system_index);
  for (auto& s : shares)
    s /= static_cast<double>(selections.entries.size());
  return shares;
}

// Mean human score of the selected explanations.
inline double recompute_human_score(const Selections& selections,
                                    const HumanScoreTable& human) {
  if (selections.entries.empty())
    throw validation_error("recompute_human_score: empty selections");
  double sum = 0.0;
  for (const auto& e : selections.entries) {
    const std::string& system = selections.system_ids.at(e.system_index);
    const double* score = human.find(e.id, system);
    if (!score)
      throw validation_error("missing human score for (" + e.id + ", " +
                             system + ")");
    sum += *score;
  }
  return sum / static_cast<double>(selections.entries.size());
}

// Mean over ids of the best human score any system achieved.
inline double oracle_upper_bound(std::span<const std::string> ids,
                                 std::span<const std::string> system_ids,
                                 const HumanScoreTable& human) {
  if (ids.empty() || system_ids.empty())
    throw validation_error("oracle_upper_bound: empty input");
  double sum = 0.0;
  for (const auto& id : ids) {
    double best = -1.0;
    for (const auto& system : system_ids) {
      const double* score = human.find(id, system);
      if (!score)
        throw validation_error("missing human score for (" + id + ", " +
                               system + ")");
      if (*score > best) best = *score;
    }
    sum += best;
  }
  return sum / static_cast<double>(ids.size());
}

}  // namespace comve
