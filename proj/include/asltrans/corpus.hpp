#pragma once

// Text data model: tokens, sentence pairs, corpora, tokenizers for both
// languages, dataset splitting and filtered subsets.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "asltrans/error.hpp"

namespace asltrans {

enum class TokenKind { word, sign, gesture, comma };

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::word;

  friend bool operator==(const Token&, const Token&) = default;
};

class TokenSequence {
 public:
  TokenSequence() = default;
  explicit TokenSequence(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }
  const std::vector<Token>& tokens() const { return tokens_; }

  void push_back(Token t) { tokens_.push_back(std::move(t)); }

  std::vector<std::string> surfaces() const {
    std::vector<std::string> out;
    out.reserve(tokens_.size());
    for (const auto& t : tokens_) out.push_back(t.surface);
    return out;
  }

  std::size_t count(TokenKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(tokens_.begin(), tokens_.end(), [kind](const Token& t) { return t.kind == kind; }));
  }

  // Surfaces joined by single spaces.
  std::string render() const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (i) out += ' ';
      out += tokens_[i].surface;
    }
    return out;
  }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<Token> tokens_;
};

struct SentencePair {
  std::string id;
  TokenSequence sign_side;
  TokenSequence english_side;
  // Original text of both sides, kept so corpora can be written back verbatim.
  std::string raw_sign;
  std::string raw_english;
};

struct Corpus {
  std::vector<SentencePair> pairs;
  std::string provenance;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct DatasetSplit {
  Corpus train;
  Corpus dev;
  Corpus test;
  std::uint64_t seed = 0;
};

enum class SubsetPredicate { has_comma, has_gesture };

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline bool is_terminal_punct(char c) { return c == '.' || c == '?' || c == '!'; }

inline std::string strip_trailing(std::string s, bool (*pred)(char)) {
  while (!s.empty() && pred(s.back())) s.pop_back();
  return s;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline TokenKind classify_sign(std::string_view surface) {
  if (surface == ",") return TokenKind::comma;
  if (surface.size() >= 2 && surface.front() == '[' && surface.back() == ']') return TokenKind::gesture;
  return TokenKind::sign;
}

// Lowercases, splits on whitespace and strips punctuation trailing each word
// (. ? ! , ; :) plus surrounding double quotes. Internal apostrophes and
// hyphens are kept.
// Tokens equal to the n-gram padding sentinel "<s>" are dropped.
inline TokenSequence tokenize_english(std::string_view text) {
  auto trailing = [](char c) {
    return detail::is_terminal_punct(c) || c == ',' || c == ';' || c == ':' || c == '"';
  };
  TokenSequence out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    word = detail::strip_trailing(std::move(word), +trailing);
    std::size_t lead = 0;
    while (lead < word.size() && word[lead] == '"') ++lead;
    word.erase(0, lead);
    if (!word.empty() && word != "<s>") out.push_back({word, TokenKind::word});
  }
  return out;
}

// Splits an ASL gloss into signs, gesture tokens ("[point]") and comma tokens.
// Sign casing is preserved; terminal . ? ! are removed from signs. Whitespace
// inside a gesture is folded to '_' so gesture tokens never contain spaces.
inline TokenSequence tokenize_asl(std::string_view text) {
  TokenSequence out;
  std::string sign;
  auto flush = [&] {
    sign = detail::strip_trailing(std::move(sign), +[](char c) { return detail::is_terminal_punct(c); });
    if (!sign.empty()) out.push_back({sign, TokenKind::sign});
    sign.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (detail::is_space(c)) {
      flush();
    } else if (c == ',') {
      flush();
      out.push_back({",", TokenKind::comma});
    } else if (c == '[') {
      flush();
      const std::size_t close = text.find_first_of("[]", i + 1);
      if (close == std::string_view::npos || text[close] == '[') {
        const std::size_t stop = close == std::string_view::npos ? text.size() : close;
        throw ParseError("", 0, "malformed gloss: unclosed gesture '" + std::string(text.substr(i, stop - i)) + "'");
      }
      std::string gesture(text.substr(i, close - i + 1));
      std::string folded;
      bool gap = false;
      for (char g : gesture) {
        if (detail::is_space(g)) {
          gap = true;
          continue;
        }
        if (gap && folded.size() > 1 && g != ']') folded += '_';
        gap = false;
        folded += g;
      }
      out.push_back({folded, TokenKind::gesture});
      i = close;
    } else {
      sign += c;
    }
  }
  flush();
  return out;
}

inline Corpus parse_corpus(std::istream& in, const std::string& source) {
  Corpus corpus;
  corpus.provenance = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (detail::trim(line).empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "missing TAB between gloss and English");

    SentencePair pair;
    pair.id = std::to_string(lineno);
    pair.raw_sign = line.substr(0, tab);
    pair.raw_english = line.substr(tab + 1);
    try {
      pair.sign_side = tokenize_asl(pair.raw_sign);
    } catch (const ParseError& e) {
      throw ParseError(source, lineno, e.what());
    }
    pair.english_side = tokenize_english(pair.raw_english);
    if (pair.sign_side.empty() || pair.english_side.empty())
      throw ParseError(source, lineno, "empty sentence side");
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  return parse_corpus(in, path);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus.pairs) out << p.raw_sign << '\t' << p.raw_english << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path);
  write_corpus(out, corpus);
  if (!out) throw IoError(path);
}

// Deterministic shuffle, then floor(0.8 N) pairs to a train pool and the rest
// to test. Dev is carved from the end of the pool: 10 pairs when N >= 50,
// otherwise max(1, floor(pool / 10)).
inline DatasetSplit split_dataset(const Corpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n < 3) throw DataError("split too small: need at least 3 pairs, got " + std::to_string(n));

  // Fisher-Yates driven directly by mt19937_64 output; std::shuffle and the
  // standard distributions are not portable across library implementations.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

  const std::size_t pool = n * 8 / 10;
  const std::size_t dev = n >= 50 ? 10 : std::max<std::size_t>(1, pool / 10);

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pair = corpus.pairs[order[k]];
    if (k < pool - dev)
      split.train.pairs.push_back(pair);
    else if (k < pool)
      split.dev.pairs.push_back(pair);
    else
      split.test.pairs.push_back(pair);
  }
  split.train.provenance = corpus.provenance + " [train]";
  split.dev.provenance = corpus.provenance + " [dev]";
  split.test.provenance = corpus.provenance + " [test]";
  return split;
}

inline Corpus filter_subset(const Corpus& corpus, SubsetPredicate predicate) {
  const TokenKind kind = predicate == SubsetPredicate::has_comma ? TokenKind::comma : TokenKind::gesture;
  Corpus out;
  out.provenance = corpus.provenance;
  for (const auto& p : corpus.pairs)
    if (p.sign_side.count(kind) > 0) out.pairs.push_back(p);
  return out;
}

inline bool has_unique_ids(const Corpus& corpus) {
  std::set<std::string> seen;
  for (const auto& p : corpus.pairs)
    if (!seen.insert(p.id).second) return false;
  return true;
}

}  // namespace asltrans
