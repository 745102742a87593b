#pragma once

// Explanation selection by minimum per-option loss. Option losses are the
// per-token mean cross-entropy of the option given the statement, produced
// by an external generative model; the argmin over losses equals the argmin
// over perplexities, which are monotone in the mean loss.
//
// Loss file format: JSON Lines, {"id": "<string>", "losses": [l0, l1, l2]};
// the source model name is the file basename without extension.

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "comve/dataset.hpp"
#include "comve/errors.hpp"
#include "comve/jsonl.hpp"
#include "comve/metrics.hpp"

namespace comve {

class LossTable {
 public:
  explicit LossTable(std::string source_model)
      : source_model_(std::move(source_model)) {}

  void add_row(const std::string& id, const std::array<double, 3>& losses) {
    if (id.empty()) throw validation_error("loss row with empty id");
    for (const double l : losses)
      if (!std::isfinite(l) || l < 0.0)
        throw validation_error("id '" + id + "': loss " + std::to_string(l) +
                               " must be finite and non-negative");
    if (index_.contains(id))
      throw validation_error("duplicate id: " + id);
    index_.emplace(id, rows_.size());
    rows_.emplace_back(id, losses);
  }

  const std::string& source_model() const { return source_model_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<std::pair<std::string, std::array<double, 3>>>& rows()
      const {
    return rows_;
  }
  bool contains(const std::string& id) const { return index_.contains(id); }

 private:
  std::string source_model_;
  std::vector<std::pair<std::string, std::array<double, 3>>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline LossTable load_losses(const std::filesystem::path& path) {
  const std::string origin = path.filename().string();
  LossTable table(path.stem().string());
  jsonl::for_each_record(path, [&](std::size_t line, const jsonl::json& rec) {
    const auto id = jsonl::field<std::string>(rec, "id", origin, line);
    const auto losses =
        jsonl::field<std::vector<double>>(rec, "losses", origin, line);
    if (losses.size() != 3)
      throw validation_error(origin + ":" + std::to_string(line) +
                             ": expected 3 losses, got " +
                             std::to_string(losses.size()));
    try {
      table.add_row(id, {losses[0], losses[1], losses[2]});
    } catch (const validation_error& e) {
      throw validation_error(origin + ":" + std::to_string(line) + ": " +
                             e.what());
    }
  });
  if (table.empty())
    throw validation_error(origin + ": no loss records");
  return table;
}

// Argmin per row; ties go to the lowest option index.
inline PredictionVector select_by_min_loss(const LossTable& table) {
  PredictionVector preds;
  for (const auto& [id, losses] : table.rows()) {
    int arg = 0;
    for (int i = 1; i < 3; ++i)
      if (losses[i] < losses[arg]) arg = i;
    preds.add(id, arg);
  }
  return preds;
}

// Accuracy of the min-loss selection against gold labels.
inline double evaluate_choices(const LossTable& table,
                               const Dataset<ChoiceExample>& golds) {
  if (table.size() != golds.size())
    throw validation_error("loss table covers " + std::to_string(table.size()) +
                           " ids, dataset has " + std::to_string(golds.size()));
  return accuracy(select_by_min_loss(table), gold_labels(golds));
}

}  // namespace comve
