#pragma once

// Round-trip-translation data augmentation: sentences are normalized,
// pushed through external forward/backward translator processes, and the
// round-tripped examples that still differ from their originals (compared
// after normalization) are appended to the training data.

#include <cctype>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "comve/dataset.hpp"
#include "comve/errors.hpp"
#include "comve/metrics.hpp"
#include "comve/subprocess.hpp"

namespace comve {

// Lowercases sentences written entirely in uppercase (at least two
// alphabetic characters, all uppercase) and appends "." when the final
// non-space character is not sentence-ending punctuation. Idempotent.
inline std::string normalize(std::string_view sentence) {
  if (sentence.empty())
    throw validation_error("normalize: empty sentence");
  std::string out(sentence);

  std::size_t alpha = 0, upper = 0;
  for (const char ch : out) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalpha(c)) {
      ++alpha;
      if (std::isupper(c)) ++upper;
    }
  }
  if (alpha >= 2 && alpha == upper)
    for (char& ch : out) {
      const auto c = static_cast<unsigned char>(ch);
      if (c < 128) ch = static_cast<char>(std::tolower(c));
    }

  std::size_t last = out.find_last_not_of(' ');
  const char end = last == std::string::npos ? '\0' : out[last];
  if (end != '.' && end != '!' && end != '?') out += '.';
  return out;
}

// backward(forward(normalize(s))) for every sentence, order preserved.
inline std::vector<std::string> round_trip(
    std::span<const std::string> sentences, const TranslatorHandle& forward,
    const TranslatorHandle& backward) {
  std::vector<std::string> normalized;
  normalized.reserve(sentences.size());
  for (const auto& s : sentences) normalized.push_back(normalize(s));
  const auto pivot = run_line_process(forward, normalized, "forward");
  return run_line_process(backward, pivot, "backward");
}

// BLEU of round-tripped sentences against the originals as single references.
inline double rtt_quality(std::span<const std::string> original_sentences,
                          std::span<const std::string> rtt_sentences) {
  if (original_sentences.size() != rtt_sentences.size())
    throw validation_error("rtt_quality: length mismatch: " +
                           std::to_string(original_sentences.size()) +
                           " vs " + std::to_string(rtt_sentences.size()));
  std::vector<std::string> hyps(rtt_sentences.begin(), rtt_sentences.end());
  std::vector<std::vector<std::string>> refs;
  refs.reserve(original_sentences.size());
  for (const auto& s : original_sentences) refs.push_back({s});
  return corpus_bleu(hyps, refs).score;
}

inline constexpr std::string_view kRttSuffix = "-rtt";

// Round-trips both sentences of every pair and returns the augmentation
// dataset: ids gain the "-rtt" suffix, labels are copied from the originals.
inline Dataset<PairExample> round_trip_pairs(const Dataset<PairExample>& ds,
                                             const TranslatorHandle& forward,
                                             const TranslatorHandle& backward) {
  std::vector<std::string> sentences;
  sentences.reserve(2 * ds.size());
  for (const auto& ex : ds.examples()) {
    sentences.push_back(ex.sent0);
    sentences.push_back(ex.sent1);
  }
  const auto translated = round_trip(sentences, forward, backward);
  Dataset<PairExample> rtt;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& ex = ds.examples()[i];
    rtt.add({ex.id + std::string(kRttSuffix), translated[2 * i],
             translated[2 * i + 1], ex.label});
  }
  return rtt;
}

struct AugmentationReport {
  std::int64_t originals = 0;
  std::int64_t round_tripped = 0;
  std::int64_t duplicates_removed = 0;
  std::int64_t final_added = 0;  // round_tripped - duplicates_removed
  double rtt_bleu = 0.0;
};

// Concatenates the original data with the round-tripped examples whose
// normalized sentence pair differs from their own original counterpart.
// Duplicates are tested per example against the original, not corpus-wide.
inline std::pair<Dataset<PairExample>, AugmentationReport> augment_dataset(
    const Dataset<PairExample>& original, const Dataset<PairExample>& rtt) {
  AugmentationReport report;
  report.originals = static_cast<std::int64_t>(original.size());
  report.round_tripped = static_cast<std::int64_t>(rtt.size());

  Dataset<PairExample> out;
  for (const auto& ex : original.examples()) out.add(ex);

  std::vector<std::string> orig_sentences, rtt_sentences;
  for (const auto& ex : rtt.examples()) {
    if (ex.id.size() <= kRttSuffix.size() ||
        !ex.id.ends_with(kRttSuffix))
      throw validation_error("rtt id '" + ex.id + "' lacks the '" +
                             std::string(kRttSuffix) + "' suffix");
    const std::string base_id =
        ex.id.substr(0, ex.id.size() - kRttSuffix.size());
    if (!original.contains(base_id))
      throw validation_error("rtt id '" + ex.id +
                             "' has no original counterpart");
    const auto& base = original.at(base_id);
    orig_sentences.push_back(base.sent0);
    orig_sentences.push_back(base.sent1);
    rtt_sentences.push_back(ex.sent0);
    rtt_sentences.push_back(ex.sent1);

    const bool duplicate =
        normalize(ex.sent0) == normalize(base.sent0) &&
        normalize(ex.sent1) == normalize(base.sent1);
    if (duplicate) {
      ++report.duplicates_removed;
      continue;
    }
    PairExample kept = ex;
    kept.label = base.label;  // labels always come from the original
    out.add(std::move(kept));
    ++report.final_added;
  }
  if (!rtt.empty())
    report.rtt_bleu = rtt_quality(orig_sentences, rtt_sentences);
  return {std::move(out), report};
}

}  // namespace comve
