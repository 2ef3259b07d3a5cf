#pragma once

// Word-translation table t(s|e) with a NULL target, trained by EM under a
// uniform alignment prior, together with alignment posteriors and the exact
// translation likelihood p(S|E) (closed form and by enumeration).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "asltrans/corpus.hpp"
#include "asltrans/error.hpp"

namespace asltrans {

// Virtual target word that source tokens with no counterpart align to.
inline const std::string kNullWord = "NULL";

inline constexpr double kDefaultTableFloor = 1e-9;

// Which side conditions which. For sign_given_english the table holds
// p(sign | english word): sources are signs and targets English words.
enum class Direction { sign_given_english, english_given_sign };

inline std::string to_string(Direction d) {
  return d == Direction::sign_given_english ? "sign_given_english" : "english_given_sign";
}

inline Direction parse_direction_tag(const std::string& tag) {
  if (tag == "sign_given_english") return Direction::sign_given_english;
  if (tag == "english_given_sign") return Direction::english_given_sign;
  throw DataError("unknown table direction '" + tag + "'");
}

inline const TokenSequence& source_side(const SentencePair& p, Direction d) {
  return d == Direction::sign_given_english ? p.sign_side : p.english_side;
}

inline const TokenSequence& target_side(const SentencePair& p, Direction d) {
  return d == Direction::sign_given_english ? p.english_side : p.sign_side;
}

class TranslationTable {
 public:
  using Column = std::map<std::string, double>;  // source token -> t(s|e)

  explicit TranslationTable(Direction direction = Direction::sign_given_english, double floor_prob = kDefaultTableFloor)
      : direction_(direction), floor_(floor_prob) {}

  Direction direction() const { return direction_; }
  double floor_prob() const { return floor_; }

  // t(source | target); unknown pairs return the floor.
  double prob(const std::string& source, const std::string& target) const {
    auto col = columns_.find(target);
    if (col == columns_.end()) return floor_;
    auto it = col->second.find(source);
    return it == col->second.end() ? floor_ : it->second;
  }

  bool contains(const std::string& source, const std::string& target) const {
    auto col = columns_.find(target);
    return col != columns_.end() && col->second.count(source) > 0;
  }

  void set(const std::string& source, const std::string& target, double p) { columns_[target][source] = p; }

  const std::map<std::string, Column>& columns() const { return columns_; }

  std::set<std::string> source_vocab() const {
    std::set<std::string> v;
    for (const auto& [_, col] : columns_)
      for (const auto& [s, __] : col) v.insert(s);
    return v;
  }

  // Every target word with a column, NULL included.
  std::set<std::string> target_vocab() const {
    std::set<std::string> v;
    for (const auto& [e, _] : columns_) v.insert(e);
    return v;
  }

  // Up to m non-NULL targets e with a stored t(source|e), best first; ties
  // broken by target string.
  std::vector<std::pair<std::string, double>> top_targets(const std::string& source, std::size_t m) const {
    std::vector<std::pair<std::string, double>> found;
    for (const auto& [e, col] : columns_) {
      if (e == kNullWord) continue;
      auto it = col.find(source);
      if (it != col.end() && it->second > 0.0) found.emplace_back(e, it->second);
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (found.size() > m) found.resize(m);
    return found;
  }

  // The source token maximizing t(s|target), ties to the smaller string.
  std::optional<std::string> best_source(const std::string& target) const {
    auto col = columns_.find(target);
    if (col == columns_.end() || col->second.empty()) return std::nullopt;
    auto best = col->second.begin();
    for (auto it = col->second.begin(); it != col->second.end(); ++it)
      if (it->second > best->second) best = it;
    return best->first;
  }

  // Largest |t - t'| over the union of both supports.
  double max_abs_diff(const TranslationTable& other) const {
    double diff = 0.0;
    auto scan = [&diff](const TranslationTable& a, const TranslationTable& b) {
      for (const auto& [e, col] : a.columns_)
        for (const auto& [s, p] : col) {
          const double q = b.contains(s, e) ? b.prob(s, e) : 0.0;
          diff = std::max(diff, std::abs(p - q));
        }
    };
    scan(*this, other);
    scan(other, *this);
    return diff;
  }

  friend bool operator==(const TranslationTable& a, const TranslationTable& b) {
    return a.direction_ == b.direction_ && a.columns_ == b.columns_;
  }

 private:
  Direction direction_;
  double floor_;
  std::map<std::string, Column> columns_;
};

struct EmConfig {
  int max_iterations = 100;
  double convergence_tol = 1e-4;
  double epsilon = 1.0;

  void validate() const {
    if (max_iterations < 1) throw DataError("EM max_iterations must be >= 1");
    if (!(convergence_tol > 0.0)) throw DataError("EM convergence tolerance must be positive");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DataError("epsilon must lie in (0, 1]");
  }
};

// rows[j][i] = P(a_j = i | S, E) for source position j, target index i
// (i = 0 is NULL).
struct AlignmentPosterior {
  std::vector<std::vector<double>> rows;
};

// Support of each target column: the source tokens it co-occurs with; NULL
// co-occurs with every source token. Each column starts uniform.
inline TranslationTable init_uniform(const Corpus& corpus, Direction direction) {
  if (corpus.empty()) throw DataError("cannot initialise a translation table from an empty corpus");
  std::map<std::string, std::set<std::string>> support;
  for (const auto& pair : corpus.pairs) {
    const auto& src = source_side(pair, direction);
    auto& null_col = support[kNullWord];
    for (const auto& s : src) null_col.insert(s.surface);
    for (const auto& e : target_side(pair, direction)) {
      auto& col = support[e.surface];
      for (const auto& s : src) col.insert(s.surface);
    }
  }
  TranslationTable table(direction);
  for (const auto& [e, sources] : support) {
    const double p = 1.0 / static_cast<double>(sources.size());
    for (const auto& s : sources) table.set(s, e, p);
  }
  return table;
}

inline AlignmentPosterior alignment_posterior(std::span<const std::string> source, std::span<const std::string> target,
                                              const TranslationTable& table) {
  AlignmentPosterior post;
  post.rows.reserve(source.size());
  for (const auto& s : source) {
    std::vector<double> row;
    row.reserve(target.size() + 1);
    row.push_back(table.prob(s, kNullWord));
    for (const auto& e : target) row.push_back(table.prob(s, e));
    double z = 0.0;
    for (double v : row) z += v;
    for (double& v : row) v /= z;
    post.rows.push_back(std::move(row));
  }
  return post;
}

inline AlignmentPosterior alignment_posterior(const TokenSequence& source, const TokenSequence& target,
                                              const TranslationTable& table) {
  const auto s = source.surfaces();
  const auto e = target.surfaces();
  return alignment_posterior(s, e, table);
}

// One EM iteration: expected counts over every pair and source position,
// then per-column renormalization. Pairs are visited in corpus order so the
// accumulation is reproducible bit for bit.
inline TranslationTable em_step(const Corpus& corpus, const TranslationTable& table) {
  const Direction dir = table.direction();
  std::map<std::string, std::map<std::string, double>> counts;  // e -> s -> C(s,e)
  for (const auto& pair : corpus.pairs) {
    const auto src = source_side(pair, dir).surfaces();
    const auto tgt = target_side(pair, dir).surfaces();
    const auto post = alignment_posterior(src, tgt, table);
    for (std::size_t j = 0; j < src.size(); ++j) {
      counts[kNullWord][src[j]] += post.rows[j][0];
      for (std::size_t i = 0; i < tgt.size(); ++i) counts[tgt[i]][src[j]] += post.rows[j][i + 1];
    }
  }
  TranslationTable next(dir, table.floor_prob());
  for (const auto& [e, col] : counts) {
    double total = 0.0;
    for (const auto& [_, c] : col) total += c;
    for (const auto& [s, c] : col) next.set(s, e, c / total);
  }
  return next;
}

// log p(S|E) = log eps - J log(1+I) + sum_j log sum_{i=0..I} t(s_j|e_i).
inline double translation_logprob(std::span<const std::string> source, std::span<const std::string> target,
                                  const TranslationTable& table, double epsilon = 1.0) {
  const double J = static_cast<double>(source.size());
  const double I = static_cast<double>(target.size());
  double total = std::log(epsilon) - J * std::log1p(I);
  for (const auto& s : source) {
    double mass = table.prob(s, kNullWord);
    for (const auto& e : target) mass += table.prob(s, e);
    total += std::log(mass);
  }
  return total;
}

inline double translation_logprob(const TokenSequence& source, const TokenSequence& target,
                                  const TranslationTable& table, double epsilon = 1.0) {
  const auto s = source.surfaces();
  const auto e = target.surfaces();
  return translation_logprob(s, e, table, epsilon);
}

inline constexpr double kBruteForceLimit = 1e6;

// Sums eps/(1+I)^J * prod_j t(s_j|e_{a_j}) over every alignment vector.
inline double brute_force_logprob(std::span<const std::string> source, std::span<const std::string> target,
                                  const TranslationTable& table, double epsilon = 1.0) {
  const std::size_t J = source.size();
  const std::size_t width = target.size() + 1;
  if (std::pow(static_cast<double>(width), static_cast<double>(J)) > kBruteForceLimit)
    throw SizeError("alignment enumeration too large: (1+" + std::to_string(target.size()) + ")^" +
                    std::to_string(J) + " exceeds 1e6");

  // cell[j][i] = t(s_j | e_i), column 0 is NULL
  std::vector<std::vector<double>> cell(J, std::vector<double>(width));
  for (std::size_t j = 0; j < J; ++j) {
    cell[j][0] = table.prob(source[j], kNullWord);
    for (std::size_t i = 0; i < target.size(); ++i) cell[j][i + 1] = table.prob(source[j], target[i]);
  }

  const double prior = epsilon / std::pow(static_cast<double>(width), static_cast<double>(J));
  std::vector<std::size_t> a(J, 0);
  double sum = 0.0;
  while (true) {
    double prod = prior;
    for (std::size_t j = 0; j < J; ++j) prod *= cell[j][a[j]];
    sum += prod;
    std::size_t j = 0;
    while (j < J && ++a[j] == width) a[j++] = 0;
    if (j == J) break;
  }
  return std::log(sum);
}

inline double brute_force_logprob(const TokenSequence& source, const TokenSequence& target,
                                  const TranslationTable& table, double epsilon = 1.0) {
  const auto s = source.surfaces();
  const auto e = target.surfaces();
  return brute_force_logprob(s, e, table, epsilon);
}

inline double corpus_loglik(const Corpus& corpus, const TranslationTable& table, double epsilon = 1.0) {
  double total = 0.0;
  for (const auto& pair : corpus.pairs)
    total += translation_logprob(source_side(pair, table.direction()), target_side(pair, table.direction()), table,
                                 epsilon);
  return total;
}

struct EmResult {
  TranslationTable table;
  int iterations = 0;
  bool converged = false;
  // Data log-likelihood before the first step and after each step.
  std::vector<double> loglik;

  double final_loglik() const { return loglik.back(); }
};

// Initialises once, then iterates until the largest change in t falls below
// the tolerance or the iteration cap is hit. `on_step` sees every table.
template <class StepObserver>
EmResult em_train(const Corpus& corpus, const EmConfig& config, Direction direction, StepObserver&& on_step) {
  config.validate();
  EmResult result{init_uniform(corpus, direction), 0, false, {}};
  result.loglik.push_back(corpus_loglik(corpus, result.table, config.epsilon));
  on_step(0, result.table);
  while (result.iterations < config.max_iterations) {
    TranslationTable next = em_step(corpus, result.table);
    const double delta = next.max_abs_diff(result.table);
    result.table = std::move(next);
    ++result.iterations;
    result.loglik.push_back(corpus_loglik(corpus, result.table, config.epsilon));
    on_step(result.iterations, result.table);
    if (delta < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

inline EmResult em_train(const Corpus& corpus, const EmConfig& config, Direction direction) {
  return em_train(corpus, config, direction, [](int, const TranslationTable&) {});
}

// Header "direction <tag> epsilon <value>", then "source\ttarget\tprob".
inline void write_table(std::ostream& out, const TranslationTable& table, double epsilon) {
  out << "direction " << to_string(table.direction()) << " epsilon " << std::setprecision(17) << epsilon << '\n';
  for (const auto& [e, col] : table.columns())
    for (const auto& [s, p] : col) out << s << '\t' << e << '\t' << std::setprecision(17) << p << '\n';
}

struct LoadedTable {
  TranslationTable table;
  double epsilon = 1.0;
};

inline LoadedTable read_table(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing table header");
  std::istringstream header(line);
  std::string kw1, tag, kw2;
  double epsilon = 0.0;
  if (!(header >> kw1 >> tag >> kw2 >> epsilon) || kw1 != "direction" || kw2 != "epsilon")
    throw ParseError(source, 1, "expected 'direction <tag> epsilon <value>'");
  LoadedTable loaded{TranslationTable(parse_direction_tag(tag)), epsilon};

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(source, lineno, "expected 'source\\ttarget\\tprob'");
    double p = 0.0;
    try {
      p = std::stod(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw ParseError(source, lineno, "bad probability");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw ParseError(source, lineno, "probability outside [0,1]");
    loaded.table.set(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), p);
  }
  return loaded;
}

inline void save_table(const std::string& path, const TranslationTable& table, double epsilon) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path);
  write_table(out, table, epsilon);
  if (!out) throw IoError(path);
}

inline LoadedTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  return read_table(in, path);
}

}  // namespace asltrans
