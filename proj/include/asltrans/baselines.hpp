#pragma once

// Rule-based reference systems for both directions.
//
// English to ASL keeps only the rare words (unigram cost above a threshold)
// and maps each through a dictionary. ASL to English maps each sign to a
// word and inserts helper words where a bigram model likes them.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asltrans/align_model.hpp"
#include "asltrans/corpus.hpp"
#include "asltrans/error.hpp"
#include "asltrans/lang_model.hpp"

namespace asltrans {

inline const std::vector<std::string>& default_helper_words() {
  static const std::vector<std::string> words = {"a",   "an", "the", "is", "are", "was", "were", "do", "does",
                                                 "did", "to", "of",  "and", "in", "that", "you", "it"};
  return words;
}

inline std::vector<std::string> load_helper_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    auto w = detail::trim(line);
    if (!w.empty()) words.push_back(std::move(w));
  }
  return words;
}

class BilingualLexicon {
 public:
  std::map<std::string, std::string> word_to_sign;
  std::map<std::string, std::string> sign_to_word;

  // Unknown words map to their uppercased form.
  std::string sign_for(const std::string& word) const {
    if (auto it = word_to_sign.find(word); it != word_to_sign.end()) return it->second;
    std::string s = word;
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }

  // Unknown signs map to their lowercased form.
  std::string word_for(const std::string& sign) const {
    if (auto it = sign_to_word.find(sign); it != sign_to_word.end()) return it->second;
    std::string w = sign;
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return w;
  }
};

// Dictionary read off a p(sign | word) table: each word's most likely sign,
// and for each sign the word under which it is most likely.
inline BilingualLexicon lexicon_from_table(const TranslationTable& table) {
  if (table.direction() != Direction::sign_given_english)
    throw DataError("lexicon needs a sign_given_english table");
  BilingualLexicon lex;
  std::map<std::string, double> best_for_sign;
  for (const auto& [word, col] : table.columns()) {
    if (word == kNullWord) continue;
    if (auto s = table.best_source(word)) lex.word_to_sign[word] = *s;
    for (const auto& [sign, p] : col) {
      auto it = best_for_sign.find(sign);
      if (it == best_for_sign.end() || p > it->second) {
        best_for_sign[sign] = p;
        lex.sign_to_word[sign] = word;
      }
    }
  }
  return lex;
}

struct UnigramCost {
  NgramModel model{1};
  double threshold = 0.0;

  double cost(const std::string& word) const {
    const std::string w[] = {word};
    return -model.score(w);
  }
};

// Threshold at the 60th percentile (nearest rank) of the costs of every
// English token occurrence in the corpus.
inline UnigramCost make_unigram_cost(const NgramModel& unigram, const Corpus& corpus, double percentile = 0.6) {
  if (unigram.order() != 1) throw DataError("unigram cost needs an order-1 model");
  UnigramCost uc{unigram, 0.0};
  std::vector<double> costs;
  for (const auto& pair : corpus.pairs)
    for (const auto& tok : pair.english_side) costs.push_back(uc.cost(tok.surface));
  if (costs.empty()) throw DataError("cannot pick a cost threshold from an empty corpus");
  std::sort(costs.begin(), costs.end());
  const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(costs.size())));
  uc.threshold = costs[std::clamp<std::size_t>(rank, 1, costs.size()) - 1];
  return uc;
}

// Same threshold computed from order-1 counts, which weight each word by its
// number of occurrences.
inline UnigramCost make_unigram_cost(const NgramModel& unigram, const NgramCounts& counts, double percentile = 0.6) {
  if (unigram.order() != 1) throw DataError("unigram cost needs an order-1 model");
  UnigramCost uc{unigram, 0.0};
  std::vector<std::pair<double, double>> weighted;  // (cost, count)
  double total = 0.0;
  for (const auto& [window, c] : counts) {
    if (c <= 0) continue;
    weighted.emplace_back(uc.cost(window.front()), c);
    total += c;
  }
  if (weighted.empty()) throw DataError("cannot pick a cost threshold from empty counts");
  std::sort(weighted.begin(), weighted.end());
  const double rank = std::max(1.0, std::ceil(percentile * total));
  double seen = 0.0;
  uc.threshold = weighted.back().first;
  for (const auto& [cost, c] : weighted) {
    seen += c;
    if (seen >= rank) {
      uc.threshold = cost;
      break;
    }
  }
  return uc;
}

inline TokenSequence baseline_eng_to_asl(const TokenSequence& sentence, const UnigramCost& cost,
                                         const BilingualLexicon& lex) {
  TokenSequence out;
  if (sentence.empty()) return out;
  std::size_t best = 0;
  double best_cost = -1.0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const double c = cost.cost(sentence[i].surface);
    if (c > cost.threshold) {
      const auto sign = lex.sign_for(sentence[i].surface);
      out.push_back({sign, classify_sign(sign)});
    }
    if (c > best_cost) {
      best_cost = c;
      best = i;
    }
  }
  if (out.empty()) {
    const auto sign = lex.sign_for(sentence[best].surface);
    out.push_back({sign, classify_sign(sign)});
  }
  return out;
}

namespace detail {

struct InsertionPath {
  double score = 0.0;
  std::size_t insertions = 0;
  std::vector<std::string> words;
};

// Tie tolerance for comparing path scores assembled in different orders.
inline constexpr double kScoreTieTol = 1e-12;

inline bool better_path(const InsertionPath& a, const InsertionPath& b) {
  if (a.score > b.score + kScoreTieTol) return true;
  if (b.score > a.score + kScoreTieTol) return false;
  if (a.insertions != b.insertions) return a.insertions < b.insertions;
  return a.words < b.words;
}

inline void keep_best(std::map<std::string, InsertionPath>& states, const std::string& last, InsertionPath path) {
  auto it = states.find(last);
  if (it == states.end())
    states.emplace(last, std::move(path));
  else if (better_path(path, it->second))
    it->second = std::move(path);
}

}  // namespace detail

// Content words from the signs (commas and gestures dropped), with at most
// one helper word in each gap (start, between words, end), chosen by exact
// dynamic programming over the bigram log-probability. Ties prefer fewer
// insertions, then the lexicographically smaller sentence.
inline TokenSequence baseline_asl_to_eng(const TokenSequence& signs, const BilingualLexicon& lex,
                                         const NgramModel& bigram, const std::vector<std::string>& helpers) {
  if (bigram.order() != 2) throw DataError("helper insertion needs a bigram model");
  std::vector<std::string> skeleton;
  for (const auto& tok : signs)
    if (tok.kind == TokenKind::sign) skeleton.push_back(lex.word_for(tok.surface));

  TokenSequence out;
  if (skeleton.empty()) return out;

  auto step = [&bigram](const std::string& last, const std::string& next) {
    if (last.empty()) return bigram.extend({}, next);
    const std::string ctx[] = {last};
    return bigram.extend(ctx, next);
  };

  // States keyed by the last word emitted; "" is sentence start.
  std::map<std::string, detail::InsertionPath> states{{"", {}}};
  auto gap = [&] {
    std::map<std::string, detail::InsertionPath> next = states;
    for (const auto& [last, path] : states)
      for (const auto& h : helpers) {
        detail::InsertionPath p = path;
        p.score += step(last, h);
        ++p.insertions;
        p.words.push_back(h);
        detail::keep_best(next, h, std::move(p));
      }
    states = std::move(next);
  };

  for (const auto& word : skeleton) {
    gap();
    std::map<std::string, detail::InsertionPath> next;
    for (const auto& [last, path] : states) {
      detail::InsertionPath p = path;
      p.score += step(last, word);
      p.words.push_back(word);
      detail::keep_best(next, word, std::move(p));
    }
    states = std::move(next);
  }
  gap();

  const detail::InsertionPath* best = nullptr;
  for (const auto& [_, path] : states)
    if (!best || detail::better_path(path, *best)) best = &path;
  for (const auto& w : best->words) out.push_back({w, TokenKind::word});
  return out;
}

}  // namespace asltrans
