#pragma once

// Report generation: copy-source BLEU baseline, BLEU-vs-human correlation
// (overall and over the top-k systems by BLEU), per-example error
// breakdowns, and the CSV / aligned-text emission for all reports.

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "comve/augment.hpp"
#include "comve/csv.hpp"
#include "comve/dataset.hpp"
#include "comve/errors.hpp"
#include "comve/metrics.hpp"
#include "comve/util.hpp"

namespace comve {

// BLEU of copying each statement as its own explanation.
inline double copy_source_baseline(const Dataset<GenerationExample>& data) {
  if (data.empty())
    throw validation_error("copy_source_baseline: empty dataset");
  std::vector<std::string> hyps;
  std::vector<std::vector<std::string>> refs;
  hyps.reserve(data.size());
  refs.reserve(data.size());
  for (const auto& ex : data.examples()) {
    hyps.push_back(ex.statement);
    refs.push_back(ex.references);
  }
  return corpus_bleu(hyps, refs).score;
}

struct LeaderboardRow {
  std::string system_id;
  double bleu = 0.0;
  double human = 0.0;
};

inline std::vector<LeaderboardRow> load_leaderboard(
    const std::filesystem::path& path) {
  static const std::vector<std::string> kHeader = {"system", "bleu", "human"};
  const std::string origin = path.filename().string();
  std::vector<LeaderboardRow> rows;
  for (const auto& rec : detail::read_table(path, kHeader, 3)) {
    const std::string where = origin + ":" + std::to_string(rec.line);
    rows.push_back({util::trim(rec.fields[0]),
                    util::parse_double(rec.fields[1], where + " bleu"),
                    util::parse_double(rec.fields[2], where + " human")});
  }
  return rows;
}

struct CorrelationEntry {
  std::string selection;  // "overall" or "top_<k>"
  std::size_t k = 0;
  double r = 0.0;
  bool degenerate = false;  // zero variance in the selected rows
};

struct CorrelationReport {
  CorrelationEntry overall;
  std::vector<CorrelationEntry> per_k;
};

namespace detail {

inline CorrelationEntry correlation_entry(std::string selection,
                                          std::span<const LeaderboardRow> rows) {
  std::vector<double> bleu, human;
  for (const auto& r : rows) {
    bleu.push_back(r.bleu);
    human.push_back(r.human);
  }
  CorrelationEntry entry{std::move(selection), rows.size(), 0.0, false};
  try {
    entry.r = pearson(bleu, human);
  } catch (const validation_error&) {
    entry.degenerate = true;
  }
  return entry;
}

}  // namespace detail

// Overall Pearson r between BLEU and human scores, plus r over the top-k
// rows by BLEU (ties broken by system id) for each requested k.
inline CorrelationReport correlation_report(
    std::span<const LeaderboardRow> rows,
    std::span<const std::size_t> top_ks) {
  if (rows.size() < 2)
    throw validation_error("correlation_report: need at least 2 rows");
  for (const std::size_t k : top_ks)
    if (k < 2 || k > rows.size())
      throw validation_error("top_k " + std::to_string(k) +
                             " outside 2.." + std::to_string(rows.size()));

  std::vector<LeaderboardRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LeaderboardRow& a, const LeaderboardRow& b) {
              if (a.bleu != b.bleu) return a.bleu > b.bleu;
              return a.system_id < b.system_id;
            });

  CorrelationReport report;
  report.overall = detail::correlation_entry("overall", rows);
  for (const std::size_t k : top_ks)
    report.per_k.push_back(detail::correlation_entry(
        "top_" + std::to_string(k),
        std::span<const LeaderboardRow>(sorted.data(), k)));
  return report;
}

struct ErrorRecord {
  std::string id;
  std::vector<std::string> inputs;  // the example's text fields
  int predicted = 0;
  int gold = 0;
};

struct ErrorBreakdown {
  std::size_t total = 0;  // examples compared
  std::vector<std::string> input_names;
  std::vector<ErrorRecord> records;  // dataset order
  double rate() const {
    return total == 0 ? 0.0
                      : static_cast<double>(records.size()) /
                            static_cast<double>(total);
  }
};

inline std::vector<std::string> example_inputs(const PairExample& ex) {
  return {ex.sent0, ex.sent1};
}
inline std::vector<std::string> example_inputs(const ChoiceExample& ex) {
  return {ex.statement, ex.options[0], ex.options[1], ex.options[2]};
}
inline std::vector<std::string> example_input_names(const PairExample&) {
  return {"sent0", "sent1"};
}
inline std::vector<std::string> example_input_names(const ChoiceExample&) {
  return {"statement", "option0", "option1", "option2"};
}

// One record per prediction/gold mismatch, in dataset order.
template <typename T>
ErrorBreakdown error_breakdown(const PredictionVector& preds,
                               const PredictionVector& golds,
                               const Dataset<T>& examples) {
  if (preds.size() != golds.size() || preds.size() != examples.size())
    throw validation_error("error_breakdown: id sets differ in size");
  ErrorBreakdown out;
  out.total = examples.size();
  out.input_names = example_input_names(T{});
  for (const auto& ex : examples.examples()) {
    const int* pred = preds.find(ex.id);
    const int* gold = golds.find(ex.id);
    if (!pred)
      throw validation_error("no prediction for id '" + ex.id + "'");
    if (!gold)
      throw validation_error("no gold label for id '" + ex.id + "'");
    if (*pred != *gold)
      out.records.push_back({ex.id, example_inputs(ex), *pred, *gold});
  }
  return out;
}

enum class ReportFormat { csv, text };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "text") return ReportFormat::text;
  throw validation_error("unknown format '" + std::string(s) +
                         "' (allowed: csv, text)");
}

inline void write_correlation_report(std::ostream& os,
                                     const CorrelationReport& report,
                                     ReportFormat format) {
  const auto entry_fields = [](const CorrelationEntry& e) {
    return std::vector<std::string>{e.selection, std::to_string(e.k),
                                    e.degenerate ? "" : util::fixed(e.r, 4),
                                    e.degenerate ? "1" : "0"};
  };
  if (format == ReportFormat::csv) {
    csv::write_row(os, std::vector<std::string>{"selection", "k", "r",
                                                "degenerate"});
    csv::write_row(os, entry_fields(report.overall));
    for (const auto& e : report.per_k) csv::write_row(os, entry_fields(e));
    return;
  }
  const auto line = [&](const CorrelationEntry& e) {
    os << std::left << std::setw(10) << e.selection << " k=" << e.k << "  r="
       << (e.degenerate ? "n/a (degenerate variance)" : util::fixed(e.r, 4))
       << "\n";
  };
  line(report.overall);
  for (const auto& e : report.per_k) line(e);
}

inline void write_error_breakdown(std::ostream& os,
                                  const ErrorBreakdown& report,
                                  ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::vector<std::string> header{"id", "predicted", "gold"};
    header.insert(header.end(), report.input_names.begin(),
                  report.input_names.end());
    csv::write_row(os, header);
    for (const auto& rec : report.records) {
      std::vector<std::string> row{rec.id, std::to_string(rec.predicted),
                                   std::to_string(rec.gold)};
      row.insert(row.end(), rec.inputs.begin(), rec.inputs.end());
      csv::write_row(os, row);
    }
    return;
  }
  os << "errors " << report.records.size() << " of " << report.total
     << " (rate " << util::fixed(report.rate(), 4) << ")\n";
  for (const auto& rec : report.records) {
    os << rec.id << "  pred=" << rec.predicted << " gold=" << rec.gold;
    for (std::size_t i = 0; i < rec.inputs.size(); ++i)
      os << "  " << report.input_names[i] << "='" << rec.inputs[i] << "'";
    os << "\n";
  }
}

inline void write_augmentation_report(std::ostream& os,
                                      const AugmentationReport& report,
                                      ReportFormat format) {
  if (format == ReportFormat::csv) {
    csv::write_row(os, std::vector<std::string>{"originals", "round_tripped",
                                                "duplicates_removed",
                                                "final_added", "rtt_bleu"});
    csv::write_row(os, std::vector<std::string>{
                           std::to_string(report.originals),
                           std::to_string(report.round_tripped),
                           std::to_string(report.duplicates_removed),
                           std::to_string(report.final_added),
                           util::fixed(report.rtt_bleu, 2)});
    return;
  }
  os << "originals          " << report.originals << "\n"
     << "round_tripped      " << report.round_tripped << "\n"
     << "duplicates_removed " << report.duplicates_removed << "\n"
     << "final_added        " << report.final_added << "\n"
     << "rtt_bleu           " << util::fixed(report.rtt_bleu, 2) << "\n";
}

}  // namespace comve
