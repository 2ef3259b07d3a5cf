#pragma once

// Sentence-level BLEU-2: brevity factor times the plain product of unigram
// and bigram precisions, with clipped n-gram matches and no smoothing.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "asltrans/corpus.hpp"
#include "asltrans/error.hpp"

namespace asltrans {

struct BleuOptions {
  // Clamp the brevity factor at 1 as standard BLEU does. Off by default, so
  // predictions longer than the reference get a factor above 1.
  bool capped_brevity = false;
};

struct BleuReport {
  double p1 = 0.0;
  double p2 = 0.0;
  double brevity = 0.0;
  double score = 0.0;
  std::size_t pred_len = 0;
  std::size_t ref_len = 0;
};

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks,
                                                                     std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace detail

// Clipped matches over the predicted n-gram count; 0 when pred has no n-grams.
inline double ngram_precision(const TokenSequence& pred, const TokenSequence& ref, std::size_t n) {
  if (n == 0) throw DataError("n-gram order must be >= 1");
  if (pred.size() < n) return 0.0;
  const auto p = detail::ngram_counts(pred.surfaces(), n);
  const auto r = detail::ngram_counts(ref.surfaces(), n);
  std::size_t matched = 0;
  for (const auto& [gram, c] : p) {
    auto it = r.find(gram);
    if (it != r.end()) matched += std::min(c, it->second);
  }
  return static_cast<double>(matched) / static_cast<double>(pred.size() - n + 1);
}

inline BleuReport bleu2(const TokenSequence& pred, const TokenSequence& ref, const BleuOptions& options = {}) {
  if (ref.empty()) throw DataError("BLEU-2 needs a non-empty reference");
  BleuReport rep;
  rep.pred_len = pred.size();
  rep.ref_len = ref.size();
  rep.p1 = ngram_precision(pred, ref, 1);
  rep.p2 = ngram_precision(pred, ref, 2);
  if (!pred.empty()) {
    rep.brevity = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(pred.size()));
    if (options.capped_brevity) rep.brevity = std::min(1.0, rep.brevity);
  }
  rep.score = rep.brevity * rep.p1 * rep.p2;
  return rep;
}

inline double corpus_mean_bleu(const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs,
                               const BleuOptions& options = {}) {
  if (pairs.empty()) throw DataError("mean BLEU-2 of an empty list");
  double total = 0.0;
  for (const auto& [pred, ref] : pairs) total += bleu2(pred, ref, options).score;
  return total / static_cast<double>(pairs.size());
}

}  // namespace asltrans
