#pragma once

// Slow, independent reference computations used only by tests. None of these
// call into the code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "asltrans/align_model.hpp"
#include "asltrans/decoder.hpp"
#include "asltrans/lang_model.hpp"

namespace oracle {

using Sentence = std::vector<std::string>;
using Pair = std::pair<Sentence, Sentence>;  // (source, target)
using Table = std::map<std::pair<std::string, std::string>, double>;  // (s, e) -> t(s|e)

inline const std::string kNull = "NULL";

// EM where the E-step enumerates every alignment vector explicitly instead of
// using the per-position factorisation.
struct BruteForceEm {
  Table table;
  int iterations = 0;
};

inline Table uniform_init(const std::vector<Pair>& corpus) {
  std::map<std::string, std::set<std::string>> support;
  for (const auto& [src, tgt] : corpus) {
    for (const auto& s : src) support[kNull].insert(s);
    for (const auto& e : tgt)
      for (const auto& s : src) support[e].insert(s);
  }
  Table t;
  for (const auto& [e, ss] : support)
    for (const auto& s : ss) t[{s, e}] = 1.0 / static_cast<double>(ss.size());
  return t;
}

inline Table em_iteration(const std::vector<Pair>& corpus, const Table& t) {
  auto get = [&t](const std::string& s, const std::string& e) {
    auto it = t.find({s, e});
    return it == t.end() ? 0.0 : it->second;
  };
  std::map<std::pair<std::string, std::string>, double> counts;
  for (const auto& [src, tgt] : corpus) {
    Sentence targets{kNull};
    targets.insert(targets.end(), tgt.begin(), tgt.end());
    const std::size_t J = src.size(), W = targets.size();
    std::vector<std::size_t> a(J, 0);
    std::vector<std::pair<std::vector<std::size_t>, double>> weighted;
    double z = 0.0;
    while (true) {
      double p = 1.0;
      for (std::size_t j = 0; j < J; ++j) p *= get(src[j], targets[a[j]]);
      weighted.emplace_back(a, p);
      z += p;
      std::size_t j = 0;
      while (j < J && ++a[j] == W) a[j++] = 0;
      if (j == J) break;
    }
    for (const auto& [al, p] : weighted)
      for (std::size_t j = 0; j < J; ++j) counts[{src[j], targets[al[j]]}] += p / z;
  }
  std::map<std::string, double> totals;
  for (const auto& [k, c] : counts) totals[k.second] += c;
  Table next;
  for (const auto& [k, c] : counts) next[k] = c / totals[k.second];
  return next;
}

inline BruteForceEm brute_force_em(const std::vector<Pair>& corpus, double tol, int max_iterations) {
  BruteForceEm r{uniform_init(corpus), 0};
  while (r.iterations < max_iterations) {
    Table next = em_iteration(corpus, r.table);
    double diff = 0.0;
    for (const auto& [k, v] : next) {
      auto it = r.table.find(k);
      diff = std::max(diff, std::abs(v - (it == r.table.end() ? 0.0 : it->second)));
    }
    r.table = std::move(next);
    ++r.iterations;
    if (diff < tol) break;
  }
  return r;
}

// Every complete hypothesis reachable under the decoder's expansion rules,
// scored from scratch; returns the best priority. Candidates per source
// token are all stored non-NULL targets, so fanout must cover them.
template <class Lm>
double best_hypothesis_priority(const Sentence& source, const asltrans::TranslationTable& table, const Lm& lm,
                                const asltrans::DecoderConfig& config, std::size_t* complete_count = nullptr) {
  const std::size_t J = source.size();
  std::vector<std::vector<std::pair<std::string, double>>> cands(J);
  for (std::size_t i = 0; i < J; ++i)
    for (const auto& [e, col] : table.columns()) {
      if (e == asltrans::kNullWord) continue;
      auto it = col.find(source[i]);
      if (it != col.end() && it->second > 0) cands[i].emplace_back(e, it->second);
    }

  double best = -std::numeric_limits<double>::infinity();
  std::size_t complete = 0;
  std::vector<int> words_on(J, 0);
  std::vector<bool> skipped(J, false);
  Sentence words;
  std::vector<double> step_t;

  std::function<void()> dfs = [&] {
    std::size_t covered = 0;
    for (std::size_t i = 0; i < J; ++i) covered += (skipped[i] || words_on[i] > 0) ? 1 : 0;
    if (covered == J) {
      ++complete;
      double tm = 0.0;
      for (double t : step_t) tm += std::log(t);
      best = std::max(best, tm + config.lm_weight * lm.score(words));
      return;
    }
    for (std::size_t i = 0; i < J; ++i) {
      if (!skipped[i] && static_cast<std::size_t>(words_on[i]) < config.max_words_per_source)
        for (const auto& [e, t] : cands[i]) {
          ++words_on[i];
          words.push_back(e);
          step_t.push_back(t);
          dfs();
          step_t.pop_back();
          words.pop_back();
          --words_on[i];
        }
      if (!skipped[i] && words_on[i] == 0) {
        skipped[i] = true;
        step_t.push_back(table.prob(source[i], asltrans::kNullWord));
        dfs();
        step_t.pop_back();
        skipped[i] = false;
      }
    }
  };
  dfs();
  if (complete_count) *complete_count = complete;
  return best;
}

// All ways of putting zero or one helper in each gap around the skeleton.
struct Insertion {
  Sentence words;
  double score;
  std::size_t insertions;
};

inline Insertion best_insertion(const Sentence& skeleton, const std::vector<std::string>& helpers,
                                const asltrans::NgramModel& bigram) {
  const std::size_t gaps = skeleton.size() + 1;
  const std::size_t options = helpers.size() + 1;
  std::vector<std::size_t> choice(gaps, 0);
  std::optional<Insertion> best;
  while (true) {
    Insertion cand{{}, 0.0, 0};
    for (std::size_t g = 0; g < gaps; ++g) {
      if (choice[g] > 0) {
        cand.words.push_back(helpers[choice[g] - 1]);
        ++cand.insertions;
      }
      if (g < skeleton.size()) cand.words.push_back(skeleton[g]);
    }
    cand.score = bigram.score(cand.words);
    auto better = [](const Insertion& a, const Insertion& b) {
      if (std::abs(a.score - b.score) > 1e-12) return a.score > b.score;
      if (a.insertions != b.insertions) return a.insertions < b.insertions;
      return a.words < b.words;
    };
    if (!best || better(cand, *best)) best = cand;
    std::size_t g = 0;
    while (g < gaps && ++choice[g] == options) choice[g++] = 0;
    if (g == gaps) break;
  }
  return *best;
}

}  // namespace oracle
