#pragma once

// Language models scoring target sentences: an English n-gram model with
// left padding and the ASL unigram model with comma-neighbour reweighting.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "asltrans/corpus.hpp"
#include "asltrans/error.hpp"

namespace asltrans {

// Left-context sentinel for n-gram windows. Never scored as a token.
inline const std::string kPadToken = "<s>";

inline constexpr double kDefaultLmFloor = 1e-7;
inline constexpr double kDefaultCommaBoost = 2.0;

// Scorers used by the decoder. score() is the log-probability of a whole
// sentence; extend() is the increment from appending one token, and must
// agree with score() on the extended sentence.
template <class M>
concept SequenceScorer = requires(const M& m, std::span<const std::string> seq, const std::string& next) {
  { m.score(seq) } -> std::convertible_to<double>;
  { m.extend(seq, next) } -> std::convertible_to<double>;
};

// Raw window counts, window length == model order.
using NgramCounts = std::map<std::vector<std::string>, double>;

class NgramModel {
 public:
  explicit NgramModel(int order = 3, double floor_prob = kDefaultLmFloor) : order_(order), floor_(floor_prob) {
    if (order < 1 || order > 5) throw DataError("n-gram order must be in 1..5, got " + std::to_string(order));
    if (!(floor_prob > 0.0)) throw DataError("n-gram floor probability must be positive");
  }

  // p(window) = count(window) / sum of counts sharing the same (n-1)-prefix.
  static NgramModel from_counts(int order, const NgramCounts& counts, double floor_prob = kDefaultLmFloor) {
    NgramModel model(order, floor_prob);
    std::map<std::vector<std::string>, double> prefix_total;
    for (const auto& [window, c] : counts) {
      if (window.size() != static_cast<std::size_t>(order)) throw DataError("n-gram window length does not match order");
      if (c > 0) prefix_total[{window.begin(), window.end() - 1}] += c;
    }
    for (const auto& [window, c] : counts) {
      if (c <= 0) continue;
      const double total = prefix_total[{window.begin(), window.end() - 1}];
      model.table_[join(window)] = c / total;
    }
    return model;
  }

  int order() const { return order_; }
  double floor_prob() const { return floor_; }
  std::size_t size() const { return table_.size(); }

  // Probability of a full window (exactly order() tokens, padding included).
  double window_prob(std::span<const std::string> window) const {
    auto it = table_.find(join(window));
    return it == table_.end() ? floor_ : it->second;
  }

  // log p(next | last order-1 tokens of history), padded on the left.
  double extend(std::span<const std::string> history, const std::string& next) const {
    std::vector<std::string> window;
    window.reserve(static_cast<std::size_t>(order_));
    const std::size_t ctx = static_cast<std::size_t>(order_ - 1);
    for (std::size_t k = 0; k < ctx; ++k) {
      // position (history.size() - ctx + k) in the padded history
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(history.size()) - static_cast<std::ptrdiff_t>(ctx) +
                                 static_cast<std::ptrdiff_t>(k);
      window.push_back(pos < 0 ? kPadToken : history[static_cast<std::size_t>(pos)]);
    }
    window.push_back(next);
    return std::log(window_prob(window));
  }

  double score(std::span<const std::string> sentence) const {
    double total = 0.0;
    for (std::size_t i = 0; i < sentence.size(); ++i) total += extend(sentence.first(i), sentence[i]);
    return total;
  }

 private:
  static std::string join(std::span<const std::string> window) {
    std::string key;
    for (std::size_t i = 0; i < window.size(); ++i) {
      if (i) key += ' ';
      key += window[i];
    }
    return key;
  }

  int order_;
  double floor_;
  std::unordered_map<std::string, double> table_;
};

inline double english_logprob(const NgramModel& model, const TokenSequence& sentence) {
  const auto words = sentence.surfaces();
  return model.score(words);
}

// Counts every padded window of the English side of a corpus.
inline NgramCounts count_english_ngrams(const Corpus& corpus, int order) {
  NgramCounts counts;
  for (const auto& pair : corpus.pairs) {
    std::vector<std::string> padded(static_cast<std::size_t>(order - 1), kPadToken);
    for (const auto& tok : pair.english_side) padded.push_back(tok.surface);
    for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
      std::vector<std::string> window(padded.begin() + static_cast<std::ptrdiff_t>(i + 1 - order),
                                      padded.begin() + static_cast<std::ptrdiff_t>(i + 1));
      counts[window] += 1.0;
    }
  }
  return counts;
}

// One record per line: count, TAB, space-separated tokens. Duplicate windows
// are summed; blank lines are skipped.
inline NgramCounts parse_ngram_counts(std::istream& in, int order, const std::string& source) {
  NgramCounts counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "expected '<count>\\t<tokens>'");

    const std::string count_text = detail::trim(std::string_view(line).substr(0, tab));
    double count = 0.0;
    std::size_t used = 0;
    try {
      count = std::stod(count_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != count_text.size() || !(count >= 0.0) || !std::isfinite(count))
      throw ParseError(source, lineno, "bad count '" + count_text + "'");

    std::vector<std::string> window;
    std::istringstream toks(line.substr(tab + 1));
    for (std::string t; toks >> t;) window.push_back(t);
    if (window.size() != static_cast<std::size_t>(order))
      throw ParseError(source, lineno,
                       "expected " + std::to_string(order) + " tokens, found " + std::to_string(window.size()));
    counts[window] += count;
  }
  return counts;
}

inline void write_ngram_counts(std::ostream& out, const NgramCounts& counts) {
  for (const auto& [window, c] : counts) {
    out << c << '\t';
    for (std::size_t i = 0; i < window.size(); ++i) out << (i ? " " : "") << window[i];
    out << '\n';
  }
}

inline NgramModel load_ngram_file(const std::string& path, int order, double floor_prob = kDefaultLmFloor) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  return NgramModel::from_counts(order, parse_ngram_counts(in, order, path), floor_prob);
}

// Unigram model over sign-side tokens. Around each comma that has a token on
// both sides, the preceding token's probability is divided by the boost and
// the following token's multiplied by it (capped at 1). Comma tokens keep
// their own unigram probability.
class AslUnigramModel {
 public:
  AslUnigramModel() = default;

  static AslUnigramModel from_counts(const std::map<std::string, double>& counts,
                                     double comma_boost = kDefaultCommaBoost, double floor_prob = kDefaultLmFloor) {
    double total = 0.0;
    for (const auto& [_, c] : counts) total += c;
    if (!(total > 0.0)) throw DataError("ASL language model needs at least one sign");
    if (!std::isfinite(comma_boost) || !(comma_boost > 0.0)) throw DataError("comma boost must be finite and positive");
    AslUnigramModel model;
    model.boost_ = comma_boost;
    model.floor_ = floor_prob;
    for (const auto& [sign, c] : counts)
      if (c > 0) model.unigram_[sign] = c / total;
    return model;
  }

  double comma_boost() const { return boost_; }
  double floor_prob() const { return floor_; }
  const std::map<std::string, double>& table() const { return unigram_; }

  double unigram(const std::string& sign) const {
    auto it = unigram_.find(sign);
    return it == unigram_.end() ? floor_ : it->second;
  }

  // Log-probability contribution of the token at `pos`.
  double term(std::span<const std::string> seq, std::size_t pos) const {
    const double u = unigram(seq[pos]);
    if (is_comma(seq[pos])) return std::log(u);
    int exponent = 0;
    if (pos >= 2 && is_comma(seq[pos - 1])) ++exponent;
    if (pos + 2 < seq.size() && is_comma(seq[pos + 1])) --exponent;
    if (exponent == 0) return std::log(u);
    return std::log(std::min(1.0, u * std::pow(boost_, exponent)));
  }

  double score(std::span<const std::string> seq) const {
    double total = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) total += term(seq, i);
    return total;
  }

  // Appending only changes the new token and the token two back (when the
  // previous token is a comma), so a window of the last four suffices.
  double extend(std::span<const std::string> prefix, const std::string& next) const {
    const std::size_t keep = std::min<std::size_t>(4, prefix.size());
    std::vector<std::string> before(prefix.end() - static_cast<std::ptrdiff_t>(keep), prefix.end());
    std::vector<std::string> after = before;
    after.push_back(next);
    double delta = term(after, keep);
    for (std::size_t p = keep >= 2 ? keep - 2 : 0; p < keep; ++p) delta += term(after, p) - term(before, p);
    return delta;
  }

 private:
  static bool is_comma(const std::string& s) { return s == ","; }

  std::map<std::string, double> unigram_;
  double boost_ = kDefaultCommaBoost;
  double floor_ = kDefaultLmFloor;
};

inline std::map<std::string, double> count_signs(const Corpus& corpus) {
  std::map<std::string, double> counts;
  for (const auto& pair : corpus.pairs)
    for (const auto& tok : pair.sign_side) counts[tok.surface] += 1.0;
  return counts;
}

inline AslUnigramModel build_asl_model(const Corpus& corpus, double comma_boost = kDefaultCommaBoost,
                                       double floor_prob = kDefaultLmFloor) {
  if (corpus.empty()) throw DataError("cannot build ASL language model from an empty corpus");
  return AslUnigramModel::from_counts(count_signs(corpus), comma_boost, floor_prob);
}

inline double asl_logprob(const AslUnigramModel& model, const TokenSequence& sentence) {
  const auto signs = sentence.surfaces();
  return model.score(signs);
}

static_assert(SequenceScorer<NgramModel>);
static_assert(SequenceScorer<AslUnigramModel>);

}  // namespace asltrans
