#pragma once

// Probability averaging and exhaustive ensemble-subset search.
//
// The search evaluates every non-empty subset of at most 20 models against
// the dev labels and keeps the best one. Equal scores are broken in favor
// of the smaller subset, then the lexicographically smallest sorted
// member-id tuple, so the result is deterministic regardless of how the
// subset ranges are split across worker threads.
//
// Probability file format: JSON Lines, one record per example,
//   {"id": "<string>", "probs": [p0, p1, ...]}
// The model id is the file basename without extension.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "comve/errors.hpp"
#include "comve/jsonl.hpp"
#include "comve/metrics.hpp"

namespace comve {

class ProbabilityMatrix {
 public:
  ProbabilityMatrix(std::string model_id, std::size_t class_count)
      : model_id_(std::move(model_id)), class_count_(class_count) {
    if (class_count_ < 2)
      throw validation_error("probability matrix needs at least 2 classes");
  }

  void add_row(const std::string& id, std::span<const double> probs) {
    if (id.empty()) throw validation_error("probability row with empty id");
    if (probs.size() != class_count_)
      throw validation_error("id '" + id + "': expected " +
                             std::to_string(class_count_) +
                             " probabilities, got " +
                             std::to_string(probs.size()));
    double sum = 0.0;
    for (const double p : probs) {
      if (!(p >= 0.0 && p <= 1.0))
        throw validation_error("id '" + id + "': probability " +
                               std::to_string(p) + " outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw validation_error("id '" + id + "': probabilities sum to " +
                             std::to_string(sum));
    if (index_.contains(id))
      throw validation_error("duplicate id: " + id);
    index_.emplace(id, ids_.size());
    ids_.push_back(id);
    data_.insert(data_.end(), probs.begin(), probs.end());
  }

  const std::string& model_id() const { return model_id_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  bool contains(const std::string& id) const { return index_.contains(id); }

  std::span<const double> row(std::size_t pos) const {
    return {data_.data() + pos * class_count_, class_count_};
  }
  std::span<const double> row(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end())
      throw validation_error("unknown id: " + id);
    return row(it->second);
  }

 private:
  std::string model_id_;
  std::size_t class_count_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;  // size() x class_count(), row-major
};

inline ProbabilityMatrix load_probabilities(const std::filesystem::path& path) {
  const std::string origin = path.filename().string();
  std::size_t class_count = 0;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  jsonl::for_each_record(path, [&](std::size_t line, const jsonl::json& rec) {
    auto id = jsonl::field<std::string>(rec, "id", origin, line);
    auto probs = jsonl::field<std::vector<double>>(rec, "probs", origin, line);
    if (class_count == 0) class_count = probs.size();
    rows.emplace_back(std::move(id), std::move(probs));
  });
  if (rows.empty())
    throw validation_error(origin + ": no probability records");
  ProbabilityMatrix m(path.stem().string(), class_count);
  for (const auto& [id, probs] : rows) {
    try {
      m.add_row(id, probs);
    } catch (const validation_error& e) {
      throw validation_error(origin + ": " + e.what());
    }
  }
  return m;
}

enum class Objective { accuracy, f1 };

inline std::string_view to_string(Objective o) {
  return o == Objective::accuracy ? "accuracy" : "f1";
}

inline Objective objective_from_string(std::string_view s) {
  if (s == "accuracy") return Objective::accuracy;
  if (s == "f1") return Objective::f1;
  throw validation_error("unknown objective '" + std::string(s) +
                         "' (allowed: accuracy, f1)");
}

namespace detail {

inline void require_aligned(std::span<const ProbabilityMatrix> matrices) {
  const auto& first = matrices.front();
  for (const auto& m : matrices.subspan(1)) {
    if (m.class_count() != first.class_count())
      throw validation_error("model '" + m.model_id() + "' has " +
                             std::to_string(m.class_count()) +
                             " classes, expected " +
                             std::to_string(first.class_count()));
    if (m.size() != first.size())
      throw validation_error("model '" + m.model_id() +
                             "' covers a different id set than '" +
                             first.model_id() + "'");
    for (const auto& id : first.ids())
      if (!m.contains(id))
        throw validation_error("model '" + m.model_id() + "' is missing id '" +
                               id + "'");
  }
}

}  // namespace detail

inline ProbabilityMatrix average_probabilities(
    std::span<const ProbabilityMatrix> matrices) {
  if (matrices.empty())
    throw validation_error("average_probabilities: no matrices");
  detail::require_aligned(matrices);
  const auto& first = matrices.front();

  std::vector<std::string> names;
  for (const auto& m : matrices) names.push_back(m.model_id());
  std::sort(names.begin(), names.end());
  ProbabilityMatrix out(util::join(names, "+"), first.class_count());

  std::vector<double> mean(first.class_count());
  for (const auto& id : first.ids()) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (const auto& m : matrices) {
      const auto row = m.row(id);
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
    }
    for (auto& v : mean) v /= static_cast<double>(matrices.size());
    out.add_row(id, mean);
  }
  return out;
}

// Argmax per row; ties go to the lowest class index.
inline PredictionVector predict(const ProbabilityMatrix& m) {
  PredictionVector preds;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto row = m.row(i);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[arg]) arg = c;
    preds.add(m.ids()[i], static_cast<int>(arg));
  }
  return preds;
}

struct EnsembleResult {
  std::vector<std::string> member_ids;  // sorted ascending
  ProbabilityMatrix averaged;
  double dev_score = 0.0;
  Objective objective = Objective::accuracy;
  std::uint64_t subsets_evaluated = 0;  // search statistics
};

namespace detail {

// One candidate in the search; ordering implements the deterministic
// tie-break (higher score, then fewer members, then smallest id tuple).
struct SearchBest {
  double score = -1.0;
  std::uint32_t mask = 0;
  int size = 0;
};

inline std::vector<std::string> mask_members(
    std::uint32_t mask, std::span<const ProbabilityMatrix> matrices) {
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < matrices.size(); ++k)
    if (mask & (std::uint32_t{1} << k)) ids.push_back(matrices[k].model_id());
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline bool beats(const SearchBest& a, const SearchBest& b,
                  std::span<const ProbabilityMatrix> matrices) {
  if (b.mask == 0) return true;
  if (a.score != b.score) return a.score > b.score;
  if (a.size != b.size) return a.size < b.size;
  return mask_members(a.mask, matrices) < mask_members(b.mask, matrices);
}

}  // namespace detail

inline EnsembleResult search_best_subset(
    std::span<const ProbabilityMatrix> matrices, const PredictionVector& golds,
    Objective objective, unsigned workers = 0,
    std::size_t max_subset_size = 0) {
  const std::size_t k = matrices.size();
  if (k < 1 || k > 20)
    throw validation_error("search_best_subset: model count " +
                           std::to_string(k) + " outside 1..20");
  detail::require_aligned(matrices);
  const auto& first = matrices.front();
  const std::size_t classes = first.class_count();
  if (objective == Objective::f1 && classes != 2)
    throw validation_error("f1 objective requires 2 classes, got " +
                           std::to_string(classes));
  {
    std::vector<std::string> names;
    for (const auto& m : matrices) names.push_back(m.model_id());
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end())
      throw validation_error("duplicate model id in search input");
  }

  // align gold labels to the first matrix's row order
  const std::size_t n = first.size();
  std::vector<int> gold(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int* g = golds.find(first.ids()[i]);
    if (!g)
      throw validation_error("id '" + first.ids()[i] + "' has no gold label");
    if (*g < 0 || static_cast<std::size_t>(*g) >= classes)
      throw validation_error("gold label " + std::to_string(*g) + " for id '" +
                             first.ids()[i] + "' outside 0.." +
                             std::to_string(classes - 1));
    gold[i] = *g;
  }
  // per-model probabilities re-ordered to the first matrix's row order
  std::vector<std::vector<double>> aligned(k);
  for (std::size_t m = 0; m < k; ++m) {
    aligned[m].reserve(n * classes);
    for (const auto& id : first.ids()) {
      const auto row = matrices[m].row(id);
      aligned[m].insert(aligned[m].end(), row.begin(), row.end());
    }
  }
  std::vector<const double*> data(k);
  for (std::size_t m = 0; m < k; ++m) data[m] = aligned[m].data();

  const std::uint32_t mask_end = std::uint32_t{1} << k;
  const auto evaluate = [&](std::uint32_t mask, std::vector<double>& sums) {
    long correct = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t m = 0; m < k; ++m) {
        if (!(mask & (std::uint32_t{1} << m))) continue;
        const double* row = data[m] + i * classes;
        for (std::size_t c = 0; c < classes; ++c) sums[c] += row[c];
      }
      std::size_t arg = 0;
      for (std::size_t c = 1; c < classes; ++c)
        if (sums[c] > sums[arg]) arg = c;
      if (static_cast<int>(arg) == gold[i]) ++correct;
      if (objective == Objective::f1) {
        if (arg == 1 && gold[i] == 1) ++tp;
        else if (arg == 1) ++fp;
        else if (gold[i] == 1) ++fn;
      }
    }
    if (objective == Objective::accuracy)
      return static_cast<double>(correct) / static_cast<double>(n);
    const long denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  };

  unsigned nworkers = workers ? workers : std::thread::hardware_concurrency();
  nworkers = std::clamp<unsigned>(nworkers, 1,
                                  static_cast<unsigned>(mask_end - 1));
  std::vector<detail::SearchBest> bests(nworkers);
  std::vector<std::uint64_t> counts(nworkers, 0);
  const auto worker = [&](unsigned w) {
    std::vector<double> sums(classes);
    detail::SearchBest local;
    std::uint64_t evaluated = 0;
    for (std::uint32_t mask = 1 + w; mask < mask_end; mask += nworkers) {
      const int size = std::popcount(mask);
      if (max_subset_size && static_cast<std::size_t>(size) > max_subset_size)
        continue;
      const double score = evaluate(mask, sums);
      ++evaluated;
      detail::SearchBest cand{score, mask, size};
      if (detail::beats(cand, local, matrices)) local = cand;
    }
    bests[w] = local;
    counts[w] = evaluated;
  };
  if (nworkers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < nworkers; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }

  detail::SearchBest best;
  std::uint64_t evaluated = 0;
  for (unsigned w = 0; w < nworkers; ++w) {
    evaluated += counts[w];
    if (bests[w].mask && detail::beats(bests[w], best, matrices)) best = bests[w];
  }
  if (best.mask == 0)
    throw validation_error("search space is empty (max subset size too small)");

  std::vector<ProbabilityMatrix> chosen;
  for (std::size_t m = 0; m < k; ++m)
    if (best.mask & (std::uint32_t{1} << m)) chosen.push_back(matrices[m]);
  EnsembleResult result{detail::mask_members(best.mask, matrices),
                        average_probabilities(chosen), best.score, objective,
                        evaluated};
  return result;
}

}  // namespace comve
