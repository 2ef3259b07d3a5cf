#pragma once

// Beam decoder over length-indexed priority queues. Queue q_i holds partial
// hypotheses that have covered i source tokens; at most k hypotheses are
// popped from each queue before moving to the next. A hypothesis may add
// another word for an already-covered source token, so the child lands in
// the same queue, which is how one source token yields several target words.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asltrans/align_model.hpp"
#include "asltrans/corpus.hpp"
#include "asltrans/error.hpp"
#include "asltrans/lang_model.hpp"

namespace asltrans {

// How the translation term of the priority is aggregated. sum_of_logs adds
// log t per emitted word; log_of_sum takes log of the summed probabilities.
enum class PriorityMode { sum_of_logs, log_of_sum };

struct DecoderConfig {
  double lm_weight = 0.1;                 // W
  std::size_t max_queue_size = 20;        // k
  std::size_t fanout = 5;                 // candidate target words per source token
  std::size_t max_words_per_source = 3;
  double epsilon = 1.0;
  PriorityMode mode = PriorityMode::sum_of_logs;

  void validate() const {
    if (!(lm_weight >= 0.0) || !std::isfinite(lm_weight)) throw DataError("language model weight must be >= 0");
    if (max_queue_size < 1) throw DataError("queue size must be >= 1");
    if (fanout < 1) throw DataError("fanout must be >= 1");
    if (max_words_per_source < 1 || max_words_per_source > 255)
      throw DataError("max words per source must be in 1..255");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DataError("epsilon must lie in (0, 1]");
  }
};

struct Step {
  std::string target;  // empty for a skip
  std::size_t source_index = 0;
  bool skip = false;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Hypothesis {
  std::vector<Step> steps;
  std::vector<std::uint8_t> words_on;  // words emitted per source index
  std::vector<bool> skipped;           // source index translated to NULL
  std::size_t covered_count = 0;
  double tm_score = 0.0;  // sum of log t over steps
  double tm_mass = 0.0;   // sum of t over steps
  double lm_score = 0.0;
  std::vector<std::string> words;
  std::string rendered;
  std::string trail;  // step encoding, last-resort tie break
  double cached_priority = 0.0;

  static Hypothesis empty(std::size_t source_len) {
    Hypothesis h;
    h.words_on.assign(source_len, 0);
    h.skipped.assign(source_len, false);
    return h;
  }

  bool covers(std::size_t i) const { return skipped[i] || words_on[i] > 0; }

  std::vector<std::size_t> covered() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < words_on.size(); ++i)
      if (covers(i)) out.push_back(i);
    return out;
  }
};

inline double priority(const Hypothesis& h, const DecoderConfig& config) {
  double tm = h.tm_score;
  if (config.mode == PriorityMode::log_of_sum) tm = h.steps.empty() ? 0.0 : std::log(h.tm_mass);
  return tm + config.lm_weight * h.lm_score;
}

// Per-source-token candidates, computed once per sentence.
struct ExpansionContext {
  std::vector<std::string> source;
  std::vector<std::vector<std::pair<std::string, double>>> candidates;
  std::vector<double> null_prob;

  ExpansionContext(std::span<const std::string> src, const TranslationTable& table, const DecoderConfig& config)
      : source(src.begin(), src.end()) {
    for (const auto& s : source) {
      candidates.push_back(table.top_targets(s, config.fanout));
      null_prob.push_back(table.prob(s, kNullWord));
    }
  }
};

namespace detail {

template <SequenceScorer Lm>
Hypothesis extend_word(const Hypothesis& h, std::size_t i, const std::string& word, double t, const Lm& lm,
                       const DecoderConfig& config) {
  Hypothesis c = h;
  if (c.words_on[i] == 0) ++c.covered_count;
  ++c.words_on[i];
  c.tm_score += std::log(t);
  c.tm_mass += t;
  c.lm_score += lm.extend(h.words, word);
  if (!c.rendered.empty()) c.rendered += ' ';
  c.rendered += word;
  c.words.push_back(word);
  c.trail += std::to_string(i) + ':' + word + '\x1f';
  c.steps.push_back({word, i, false});
  c.cached_priority = priority(c, config);
  return c;
}

inline Hypothesis extend_skip(const Hypothesis& h, std::size_t i, double t, const DecoderConfig& config) {
  Hypothesis c = h;
  c.skipped[i] = true;
  ++c.covered_count;
  c.tm_score += std::log(t);
  c.tm_mass += t;
  c.trail += std::to_string(i) + ":\x1e\x1f";
  c.steps.push_back({"", i, true});
  c.cached_priority = priority(c, config);
  return c;
}

// Orders the priority queue: higher priority first, then the smaller
// rendered sentence, then the smaller step trail.
struct WorseThan {
  bool operator()(const Hypothesis& a, const Hypothesis& b) const {
    if (a.cached_priority != b.cached_priority) return a.cached_priority < b.cached_priority;
    if (a.rendered != b.rendered) return a.rendered > b.rendered;
    return a.trail > b.trail;
  }
};

}  // namespace detail

// Children of h: for every source index, one child per top candidate word
// (re-translating a covered index is allowed up to max_words_per_source),
// plus a NULL translation for every uncovered index. An index translated to
// NULL takes no further words.
template <SequenceScorer Lm>
std::vector<Hypothesis> expand(const Hypothesis& h, const ExpansionContext& ctx, const Lm& lm,
                               const DecoderConfig& config) {
  std::vector<Hypothesis> out;
  for (std::size_t i = 0; i < ctx.source.size(); ++i) {
    if (!h.skipped[i] && h.words_on[i] < config.max_words_per_source)
      for (const auto& [word, t] : ctx.candidates[i]) out.push_back(detail::extend_word(h, i, word, t, lm, config));
    if (!h.covers(i)) out.push_back(detail::extend_skip(h, i, ctx.null_prob[i], config));
  }
  return out;
}

template <SequenceScorer Lm>
std::vector<Hypothesis> expand(const Hypothesis& h, std::span<const std::string> source, const TranslationTable& table,
                               const Lm& lm, const DecoderConfig& config) {
  return expand(h, ExpansionContext(source, table, config), lm, config);
}

// Records every insertion; used by tests to audit the beam contract.
struct DecodeTrace {
  struct Insert {
    std::size_t queue_index;
    std::vector<Step> steps;
  };
  std::vector<Insert> inserts;
  std::vector<std::size_t> pops_per_queue;
};

struct DecodeResult {
  TokenSequence output;
  double priority = 0.0;
  std::size_t expansions = 0;
  Hypothesis best;
};

inline TokenSequence render_target(const std::vector<std::string>& words, Direction direction) {
  TokenSequence out;
  for (const auto& w : words)
    out.push_back({w, direction == Direction::sign_given_english ? TokenKind::word : classify_sign(w)});
  return out;
}

template <SequenceScorer Lm>
DecodeResult decode(std::span<const std::string> source, const TranslationTable& table, const Lm& lm,
                    const DecoderConfig& config, DecodeTrace* trace = nullptr) {
  config.validate();
  const std::size_t len = source.size();
  DecodeResult result;
  if (len == 0) return result;

  const ExpansionContext ctx(source, table, config);
  using Queue = std::priority_queue<Hypothesis, std::vector<Hypothesis>, detail::WorseThan>;
  std::vector<Queue> queues(len + 1);
  queues[0].push(Hypothesis::empty(len));
  if (trace) trace->pops_per_queue.assign(len + 1, 0);

  for (std::size_t q = 0; q < len; ++q) {
    for (std::size_t pops = 0; pops < config.max_queue_size && !queues[q].empty(); ++pops) {
      Hypothesis h = queues[q].top();
      queues[q].pop();
      if (trace) ++trace->pops_per_queue[q];
      for (auto& child : expand(h, ctx, lm, config)) {
        ++result.expansions;
        if (trace) trace->inserts.push_back({child.covered_count, child.steps});
        queues[child.covered_count].push(std::move(child));
      }
    }
  }

  if (queues[len].empty()) throw DataError("decoder produced no complete translation");
  result.best = queues[len].top();
  // Rescore the finished sentence from scratch.
  result.best.lm_score = lm.score(result.best.words);
  result.priority = priority(result.best, config);
  result.output = render_target(result.best.words, table.direction());
  return result;
}

template <SequenceScorer Lm>
DecodeResult decode(const TokenSequence& source, const TranslationTable& table, const Lm& lm,
                    const DecoderConfig& config, DecodeTrace* trace = nullptr) {
  const auto src = source.surfaces();
  return decode(std::span<const std::string>(src), table, lm, config, trace);
}

struct Translation {
  std::string id;
  TokenSequence output;
  double priority = 0.0;
};

// Decodes the source side of every pair; the table's direction decides
// which side that is.
template <SequenceScorer Lm>
std::vector<Translation> translate_corpus(const Corpus& corpus, const TranslationTable& table, const Lm& lm,
                                          const DecoderConfig& config) {
  std::vector<Translation> out;
  out.reserve(corpus.size());
  for (const auto& pair : corpus.pairs) {
    try {
      auto r = decode(source_side(pair, table.direction()), table, lm, config);
      out.push_back({pair.id, std::move(r.output), r.priority});
    } catch (const Error& e) {
      throw DataError("pair " + pair.id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace asltrans
