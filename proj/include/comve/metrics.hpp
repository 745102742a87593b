#pragma once

// Classification metrics, corpus BLEU and Pearson correlation.
//
// BLEU configuration: case-sensitive; tokens split on ASCII whitespace with
// each ASCII punctuation character becoming its own token; n-gram order 4;
// clipped modified precisions aggregated over the corpus; a zero n-gram
// precision yields overall score 0 (no smoothing); multi-reference brevity
// penalty uses the closest reference length, ties going to the shorter one.
//
// All operations are pure functions and safe to call concurrently.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "comve/errors.hpp"

namespace comve {

class PredictionVector {
 public:
  void add(std::string id, int label) {
    if (id.empty()) throw validation_error("prediction with empty id");
    if (index_.contains(id))
      throw validation_error("duplicate id: " + id);
    index_.emplace(id, entries_.size());
    entries_.emplace_back(std::move(id), label);
  }

  const std::vector<std::pair<std::string, int>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // nullptr when the id is absent
  const int* find(const std::string& id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &entries_[it->second].second;
  }

 private:
  std::vector<std::pair<std::string, int>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gold labels of a fully labeled dataset as a PredictionVector.
template <typename DatasetT>
PredictionVector gold_labels(const DatasetT& ds) {
  PredictionVector golds;
  for (const auto& ex : ds.examples()) {
    if (!ex.label)
      throw validation_error("unlabeled example: " + ex.id);
    golds.add(ex.id, *ex.label);
  }
  return golds;
}

namespace detail {

inline void require_same_ids(const PredictionVector& preds,
                             const PredictionVector& golds) {
  if (preds.size() != golds.size())
    throw validation_error(
        "prediction/gold id sets differ in size: " +
        std::to_string(preds.size()) + " vs " + std::to_string(golds.size()));
  for (const auto& [id, label] : preds.entries())
    if (!golds.find(id))
      throw validation_error("id '" + id + "' has no gold label");
}

}  // namespace detail

inline double accuracy(const PredictionVector& preds,
                       const PredictionVector& golds) {
  if (preds.empty()) throw validation_error("accuracy: empty input");
  detail::require_same_ids(preds, golds);
  std::size_t correct = 0;
  for (const auto& [id, label] : preds.entries())
    if (*golds.find(id) == label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

struct F1Score {
  double value = 0.0;
  // no predicted and no gold positives anywhere; the 0 is vacuous
  bool degenerate = false;
};

inline F1Score binary_f1(const PredictionVector& preds,
                         const PredictionVector& golds, int positive_label) {
  if (preds.empty()) throw validation_error("binary_f1: empty input");
  if (positive_label != 0 && positive_label != 1)
    throw validation_error("binary_f1: positive label must be 0 or 1");
  detail::require_same_ids(preds, golds);
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [id, pred] : preds.entries()) {
    const int gold = *golds.find(id);
    if ((pred != 0 && pred != 1) || (gold != 0 && gold != 1))
      throw validation_error("binary_f1: non-binary label for id '" + id +
                             "'");
    if (pred == positive_label && gold == positive_label) ++tp;
    else if (pred == positive_label) ++fp;
    else if (gold == positive_label) ++fn;
  }
  F1Score f1;
  f1.degenerate = tp + fp == 0 && tp + fn == 0;
  const long denom = 2 * tp + fp + fn;
  f1.value = denom == 0 ? 0.0
                        : 2.0 * static_cast<double>(tp) /
                              static_cast<double>(denom);
  return f1;
}

inline bool is_ascii_punct(unsigned char c) {
  return c < 128 && std::ispunct(c);
}

inline std::vector<std::string> bleu_tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string word;
  for (const char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isspace(c)) {
      if (!word.empty()) tokens.push_back(std::exchange(word, {}));
    } else if (is_ascii_punct(c)) {
      if (!word.empty()) tokens.push_back(std::exchange(word, {}));
      tokens.emplace_back(1, ch);
    } else {
      word += ch;  // non-ASCII bytes stay inside the word
    }
  }
  if (!word.empty()) tokens.push_back(std::move(word));
  return tokens;
}

struct BleuScore {
  double score = 0.0;  // 0..100
  std::array<double, 4> ngram_precisions{};
  double brevity_penalty = 1.0;
  std::int64_t hyp_length = 0;
  std::int64_t ref_length = 0;
};

namespace detail {

// n-gram keys are tokens joined with 0x1f so they can live in a flat map
inline void count_ngrams(std::span<const std::string> tokens, std::size_t n,
                         std::unordered_map<std::string, long>& counts) {
  if (tokens.size() < n) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key += '\x1f';
      key += tokens[i + j];
    }
    ++counts[key];
  }
}

}  // namespace detail

inline BleuScore corpus_bleu(std::span<const std::string> hyps,
                             std::span<const std::vector<std::string>> refs) {
  constexpr std::size_t kOrder = 4;
  if (hyps.empty()) throw validation_error("corpus_bleu: empty corpus");
  if (hyps.size() != refs.size())
    throw validation_error("corpus_bleu: " + std::to_string(hyps.size()) +
                           " hypotheses vs " + std::to_string(refs.size()) +
                           " reference sets");

  std::array<long, kOrder> matched{};
  std::array<long, kOrder> total{};
  std::int64_t hyp_len = 0, ref_len = 0;

  std::unordered_map<std::string, long> hyp_counts, ref_max;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (refs[i].empty())
      throw validation_error("corpus_bleu: no references for hypothesis " +
                             std::to_string(i));
    const auto hyp_toks = bleu_tokenize(hyps[i]);
    std::vector<std::vector<std::string>> ref_toks;
    ref_toks.reserve(refs[i].size());
    for (const auto& r : refs[i]) ref_toks.push_back(bleu_tokenize(r));

    hyp_len += static_cast<std::int64_t>(hyp_toks.size());
    std::size_t closest = ref_toks[0].size();
    for (const auto& r : ref_toks) {
      const auto d = [&](std::size_t len) {
        return len > hyp_toks.size() ? len - hyp_toks.size()
                                     : hyp_toks.size() - len;
      };
      if (d(r.size()) < d(closest) ||
          (d(r.size()) == d(closest) && r.size() < closest))
        closest = r.size();
    }
    ref_len += static_cast<std::int64_t>(closest);

    for (std::size_t n = 1; n <= kOrder; ++n) {
      hyp_counts.clear();
      detail::count_ngrams(hyp_toks, n, hyp_counts);
      ref_max.clear();
      for (const auto& r : ref_toks) {
        std::unordered_map<std::string, long> rc;
        detail::count_ngrams(r, n, rc);
        for (const auto& [gram, c] : rc) {
          auto& m = ref_max[gram];
          if (c > m) m = c;
        }
      }
      for (const auto& [gram, c] : hyp_counts) {
        const auto it = ref_max.find(gram);
        if (it != ref_max.end())
          matched[n - 1] += std::min(c, it->second);
      }
      if (hyp_toks.size() >= n)
        total[n - 1] += static_cast<long>(hyp_toks.size() - n + 1);
    }
  }

  BleuScore out;
  out.hyp_length = hyp_len;
  out.ref_length = ref_len;
  for (std::size_t n = 0; n < kOrder; ++n)
    out.ngram_precisions[n] =
        total[n] > 0 ? static_cast<double>(matched[n]) /
                           static_cast<double>(total[n])
                     : 0.0;
  out.brevity_penalty =
      (hyp_len == 0 || hyp_len > ref_len)
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) /
                               static_cast<double>(hyp_len));
  bool any_zero = false;
  double log_sum = 0.0;
  for (const double p : out.ngram_precisions) {
    if (p <= 0.0)
      any_zero = true;
    else
      log_sum += std::log(p);
  }
  out.score = any_zero
                  ? 0.0
                  : 100.0 * out.brevity_penalty *
                        std::exp(log_sum / static_cast<double>(kOrder));
  return out;
}

// Sample Pearson correlation coefficient.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw validation_error("pearson: length mismatch: " +
                           std::to_string(xs.size()) + " vs " +
                           std::to_string(ys.size()));
  if (xs.size() < 2)
    throw validation_error("pearson: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0)
    throw validation_error("pearson: constant input (zero variance)");
  const double r = cov / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace comve
