#pragma once

// Experiment orchestration shared by the command-line tool and the
// acceptance suite: run configuration, model training and persistence,
// translation, evaluation, baselines and the hyperparameter sweep.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asltrans/align_model.hpp"
#include "asltrans/baselines.hpp"
#include "asltrans/bleu.hpp"
#include "asltrans/corpus.hpp"
#include "asltrans/decoder.hpp"
#include "asltrans/error.hpp"
#include "asltrans/lang_model.hpp"

namespace asltrans {

enum class TranslationDirection { asl_to_eng, eng_to_asl };
enum class LmKind { unigram, bigram, trigram };
enum class SubsetTag { all, comma, gesture };

inline std::string to_string(TranslationDirection d) {
  return d == TranslationDirection::asl_to_eng ? "asl-to-eng" : "eng-to-asl";
}
inline std::string to_string(LmKind k) {
  switch (k) {
    case LmKind::unigram: return "unigram";
    case LmKind::bigram: return "bigram";
    case LmKind::trigram: return "trigram";
  }
  return "?";
}
inline std::string to_string(SubsetTag s) {
  switch (s) {
    case SubsetTag::all: return "all";
    case SubsetTag::comma: return "comma";
    case SubsetTag::gesture: return "gesture";
  }
  return "?";
}

inline int order_of(LmKind k) { return static_cast<int>(k) + 1; }

inline TranslationDirection parse_translation_direction(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "asl-to-eng") return TranslationDirection::asl_to_eng;
  if (s == "eng-to-asl") return TranslationDirection::eng_to_asl;
  throw DataError("unknown direction '" + s + "' (expected asl-to-eng or eng-to-asl)");
}

inline LmKind parse_lm_kind(const std::string& s) {
  if (s == "unigram") return LmKind::unigram;
  if (s == "bigram") return LmKind::bigram;
  if (s == "trigram") return LmKind::trigram;
  throw DataError("unknown lm kind '" + s + "' (expected unigram, bigram or trigram)");
}

inline SubsetTag parse_subset(const std::string& s) {
  if (s == "all") return SubsetTag::all;
  if (s == "comma") return SubsetTag::comma;
  if (s == "gesture") return SubsetTag::gesture;
  throw DataError("unknown subset '" + s + "' (expected all, comma or gesture)");
}

// The table a direction decodes with: ASL to English searches English
// sentences under p(signs | English), and the reverse for English to ASL.
inline Direction table_direction(TranslationDirection d) {
  return d == TranslationDirection::asl_to_eng ? Direction::sign_given_english : Direction::english_given_sign;
}

struct RunConfig {
  TranslationDirection direction = TranslationDirection::asl_to_eng;
  LmKind lm_kind = LmKind::trigram;
  DecoderConfig decoder;
  EmConfig em;
  std::uint64_t seed = 0;
  bool capped_brevity = false;
  SubsetTag subset = SubsetTag::all;
  double comma_boost = kDefaultCommaBoost;
  std::string ngram_file;    // external English n-gram counts, overrides the trained ones
  std::string helpers_file;  // helper words for the ASL to English baseline

  // English to ASL always scores with the ASL unigram model.
  LmKind effective_lm_kind() const {
    return direction == TranslationDirection::eng_to_asl ? LmKind::unigram : lm_kind;
  }

  // Applies one key=value setting. Keys are the long flag names; '_' and '-'
  // are interchangeable.
  void set(std::string key, const std::string& value) {
    std::replace(key.begin(), key.end(), '_', '-');
    auto real = [&] {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != value.size()) throw DataError("bad number for " + key + ": '" + value + "'");
      return v;
    };
    auto whole = [&] {
      const double v = real();
      if (v < 0 || v != static_cast<double>(static_cast<unsigned long long>(v)))
        throw DataError("bad integer for " + key + ": '" + value + "'");
      return static_cast<unsigned long long>(v);
    };
    auto boolean = [&] {
      if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
      if (value == "0" || value == "false" || value == "no" || value == "off") return false;
      throw DataError("bad boolean for " + key + ": '" + value + "'");
    };

    if (key == "direction") direction = parse_translation_direction(value);
    else if (key == "lm-kind") lm_kind = parse_lm_kind(value);
    else if (key == "lm-weight") decoder.lm_weight = real();
    else if (key == "queue-size") decoder.max_queue_size = whole();
    else if (key == "fanout") decoder.fanout = whole();
    else if (key == "max-words-per-source") decoder.max_words_per_source = whole();
    else if (key == "epsilon") decoder.epsilon = em.epsilon = real();
    else if (key == "priority-mode") {
      if (value == "sum-of-logs" || value == "sum_of_logs") decoder.mode = PriorityMode::sum_of_logs;
      else if (value == "log-of-sum" || value == "log_of_sum") decoder.mode = PriorityMode::log_of_sum;
      else throw DataError("unknown priority mode '" + value + "'");
    }
    else if (key == "seed") seed = whole();
    else if (key == "capped-brevity") capped_brevity = boolean();
    else if (key == "subset") subset = parse_subset(value);
    else if (key == "comma-boost") comma_boost = real();
    else if (key == "max-iterations") em.max_iterations = static_cast<int>(whole());
    else if (key == "tol") em.convergence_tol = real();
    else if (key == "ngram-file") ngram_file = value;
    else if (key == "helpers-file") helpers_file = value;
    else throw DataError("unknown setting '" + key + "'");
  }

  void validate() const {
    decoder.validate();
    em.validate();
    if (!(comma_boost > 0.0) || !std::isfinite(comma_boost)) throw DataError("comma boost must be finite and positive");
  }
};

// key=value lines; '#' starts a comment line.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(path, lineno, "expected key=value");
    kv.emplace_back(detail::trim(std::string_view(text).substr(0, eq)),
                    detail::trim(std::string_view(text).substr(eq + 1)));
  }
  return kv;
}

// ---------------------------------------------------------------------------
// Models

struct ModelBundle {
  TranslationTable sign_given_english{Direction::sign_given_english};
  TranslationTable english_given_sign{Direction::english_given_sign};
  std::map<std::string, double> sign_counts;
  std::map<int, NgramCounts> english_counts;  // orders 1..3
  double epsilon = 1.0;

  const TranslationTable& table(TranslationDirection d) const {
    return d == TranslationDirection::asl_to_eng ? sign_given_english : english_given_sign;
  }
};

struct TrainSummary {
  int iterations = 0;
  bool converged = false;
  double final_loglik = 0.0;
};

struct TrainReport {
  ModelBundle models;
  TrainSummary sign_given_english;
  TrainSummary english_given_sign;
};

inline constexpr int kTrainedEnglishOrders = 3;

inline TrainReport train_models(const Corpus& train, const EmConfig& em) {
  if (train.empty()) throw DataError("training corpus is empty");
  em.validate();
  TrainReport report;
  auto run = [&](Direction d, TranslationTable& out, TrainSummary& summary) {
    auto r = em_train(train, em, d);
    summary = {r.iterations, r.converged, r.final_loglik()};
    out = std::move(r.table);
  };
  run(Direction::sign_given_english, report.models.sign_given_english, report.sign_given_english);
  run(Direction::english_given_sign, report.models.english_given_sign, report.english_given_sign);
  report.models.sign_counts = count_signs(train);
  for (int n = 1; n <= kTrainedEnglishOrders; ++n) report.models.english_counts[n] = count_english_ngrams(train, n);
  report.models.epsilon = em.epsilon;
  return report;
}

namespace files {
inline const char* const kSignGivenEnglish = "table.sign_given_english.tsv";
inline const char* const kEnglishGivenSign = "table.english_given_sign.tsv";
inline const char* const kSignCounts = "asl_unigram.counts";
inline const char* const kTrainLog = "train.log";
inline std::string english_counts(int order) { return "english." + std::to_string(order) + "gram.counts"; }
}  // namespace files

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string());
  out << content;
  if (!out) throw IoError(path.string());
}

inline std::string fmt_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline void save_models(const std::string& dir, const TrainReport& report, const EmConfig& em) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  const auto& m = report.models;
  save_table((root / files::kSignGivenEnglish).string(), m.sign_given_english, m.epsilon);
  save_table((root / files::kEnglishGivenSign).string(), m.english_given_sign, m.epsilon);

  std::ostringstream signs;
  for (const auto& [sign, c] : m.sign_counts) signs << c << '\t' << sign << '\n';
  detail::write_file(root / files::kSignCounts, signs.str());

  for (const auto& [order, counts] : m.english_counts) {
    std::ostringstream os;
    write_ngram_counts(os, counts);
    detail::write_file(root / files::english_counts(order), os.str());
  }

  std::ostringstream log;
  log << "max_iterations=" << em.max_iterations << '\n'
      << "convergence_tol=" << detail::fmt_exact(em.convergence_tol) << '\n'
      << "epsilon=" << detail::fmt_exact(em.epsilon) << '\n';
  auto summary = [&log](const char* tag, const TrainSummary& s) {
    log << tag << ".iterations=" << s.iterations << '\n'
        << tag << ".converged=" << (s.converged ? 1 : 0) << '\n'
        << tag << ".final_loglik=" << detail::fmt_exact(s.final_loglik) << '\n';
  };
  summary("sign_given_english", report.sign_given_english);
  summary("english_given_sign", report.english_given_sign);
  detail::write_file(root / files::kTrainLog, log.str());
}

inline ModelBundle load_models(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  ModelBundle m;
  auto sge = load_table((root / files::kSignGivenEnglish).string());
  auto egs = load_table((root / files::kEnglishGivenSign).string());
  if (sge.table.direction() != Direction::sign_given_english || egs.table.direction() != Direction::english_given_sign)
    throw DataError("model directory '" + dir + "' has tables with swapped directions");
  m.sign_given_english = std::move(sge.table);
  m.english_given_sign = std::move(egs.table);
  m.epsilon = sge.epsilon;

  {
    const auto path = (root / files::kSignCounts).string();
    std::ifstream in(path);
    if (!in) throw IoError(path);
    // Same record layout as an order-1 n-gram file, but signs keep their case.
    for (const auto& [window, c] : parse_ngram_counts(in, 1, path)) m.sign_counts[window[0]] += c;
  }
  for (int n = 1; n <= kTrainedEnglishOrders; ++n) {
    const auto path = (root / files::english_counts(n)).string();
    std::ifstream in(path);
    if (!in) throw IoError(path);
    m.english_counts[n] = parse_ngram_counts(in, n, path);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Translation

// English language model for the configured kind: external counts when an
// n-gram file is given, otherwise the counts gathered at training time.
inline NgramModel english_model(const ModelBundle& models, const RunConfig& config, LmKind kind) {
  const int order = order_of(kind);
  if (!config.ngram_file.empty()) return load_ngram_file(config.ngram_file, order);
  auto it = models.english_counts.find(order);
  if (it == models.english_counts.end()) throw DataError("no English " + to_string(kind) + " counts in model");
  return NgramModel::from_counts(order, it->second);
}

inline AslUnigramModel asl_model(const ModelBundle& models, const RunConfig& config) {
  return AslUnigramModel::from_counts(models.sign_counts, config.comma_boost);
}

inline TokenSequence tokenize_source(const std::string& line, TranslationDirection d) {
  return d == TranslationDirection::asl_to_eng ? tokenize_asl(line) : tokenize_english(line);
}

inline const TokenSequence& source_of(const SentencePair& p, TranslationDirection d) {
  return d == TranslationDirection::asl_to_eng ? p.sign_side : p.english_side;
}

inline const TokenSequence& reference_of(const SentencePair& p, TranslationDirection d) {
  return d == TranslationDirection::asl_to_eng ? p.english_side : p.sign_side;
}

// Decodes each sentence with the direction's table and target-side model.
inline std::vector<TokenSequence> translate_all(const ModelBundle& models, const RunConfig& config,
                                                const std::vector<TokenSequence>& sources) {
  config.validate();
  const auto& table = models.table(config.direction);
  std::vector<TokenSequence> out;
  out.reserve(sources.size());
  auto run = [&](const auto& lm) {
    for (const auto& s : sources) out.push_back(decode(s, table, lm, config.decoder).output);
  };
  if (config.direction == TranslationDirection::asl_to_eng)
    run(english_model(models, config, config.effective_lm_kind()));
  else
    run(asl_model(models, config));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRow {
  std::string id;
  TokenSequence source;
  TokenSequence output;
  TokenSequence reference;
  BleuReport bleu;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean = 0.0;
  SubsetTag subset = SubsetTag::all;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

inline Corpus apply_subset(const Corpus& corpus, SubsetTag subset) {
  if (subset == SubsetTag::all) return corpus;
  return filter_subset(corpus,
                       subset == SubsetTag::comma ? SubsetPredicate::has_comma : SubsetPredicate::has_gesture);
}

inline std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& c, const std::string& system) {
  return {{"system", system},
          {"direction", to_string(c.direction)},
          {"lm_kind", to_string(c.effective_lm_kind())},
          {"lm_weight", detail::fmt_exact(c.decoder.lm_weight)},
          {"queue_size", std::to_string(c.decoder.max_queue_size)},
          {"fanout", std::to_string(c.decoder.fanout)},
          {"epsilon", detail::fmt_exact(c.decoder.epsilon)},
          {"capped_brevity", c.capped_brevity ? "1" : "0"},
          {"subset", to_string(c.subset)}};
}

namespace detail {

inline EvalReport score_outputs(const Corpus& subset, const std::vector<TokenSequence>& outputs,
                                const RunConfig& config, const std::string& system) {
  EvalReport report;
  report.subset = config.subset;
  report.config_echo = echo_config(config, system);
  const BleuOptions opts{config.capped_brevity};
  double total = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto& pair = subset.pairs[i];
    EvalRow row{pair.id, source_of(pair, config.direction), outputs[i], reference_of(pair, config.direction), {}};
    row.bleu = bleu2(row.output, row.reference, opts);
    total += row.bleu.score;
    report.rows.push_back(std::move(row));
  }
  report.mean = total / static_cast<double>(report.rows.size());
  return report;
}

inline Corpus checked_subset(const Corpus& corpus, SubsetTag tag) {
  if (corpus.empty()) throw DataError("evaluation corpus is empty");
  Corpus subset = apply_subset(corpus, tag);
  if (subset.empty()) throw DataError("no matching pairs for subset '" + to_string(tag) + "'");
  return subset;
}

}  // namespace detail

inline EvalReport evaluate(const ModelBundle& models, const Corpus& corpus, const RunConfig& config) {
  const Corpus subset = detail::checked_subset(corpus, config.subset);
  std::vector<TokenSequence> sources;
  for (const auto& p : subset.pairs) sources.push_back(source_of(p, config.direction));
  return detail::score_outputs(subset, translate_all(models, config, sources), config, "system");
}

inline EvalReport evaluate_baseline(const ModelBundle& models, const Corpus& corpus, const RunConfig& config) {
  const Corpus subset = detail::checked_subset(corpus, config.subset);
  const BilingualLexicon lex = lexicon_from_table(models.sign_given_english);
  std::vector<TokenSequence> outputs;
  if (config.direction == TranslationDirection::eng_to_asl) {
    const auto& counts = models.english_counts.at(1);
    const UnigramCost cost = make_unigram_cost(NgramModel::from_counts(1, counts), counts);
    for (const auto& p : subset.pairs) outputs.push_back(baseline_eng_to_asl(p.english_side, cost, lex));
  } else {
    const NgramModel bigram = english_model(models, config, LmKind::bigram);
    const auto helpers = config.helpers_file.empty() ? default_helper_words() : load_helper_words(config.helpers_file);
    for (const auto& p : subset.pairs) outputs.push_back(baseline_asl_to_eng(p.sign_side, lex, bigram, helpers));
  }
  return detail::score_outputs(subset, outputs, config, "baseline");
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepGrid {
  std::vector<std::size_t> queue_sizes;
  std::vector<double> lm_weights;
  std::vector<LmKind> lm_kinds;

  std::size_t size() const { return queue_sizes.size() * lm_weights.size() * lm_kinds.size(); }

  static SweepGrid defaults(TranslationDirection d) {
    if (d == TranslationDirection::asl_to_eng) return {{8, 10, 20}, {0.1, 0.2, 0.3}, {LmKind::bigram, LmKind::trigram}};
    return {{13, 15, 20}, {0.1, 0.2, 0.3}, {LmKind::unigram}};
  }
};

struct SweepRow {
  LmKind lm_kind;
  std::size_t queue_size;
  double lm_weight;
  double mean_bleu;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (lm kind, queue size, weight)
  std::size_t best = 0;        // first row with the highest mean
};

inline SweepResult sweep(const ModelBundle& models, const Corpus& dev, const RunConfig& base, const SweepGrid& grid) {
  if (grid.queue_sizes.empty() || grid.lm_weights.empty() || grid.lm_kinds.empty())
    throw DataError("sweep grid axes must be non-empty");
  SweepResult result;
  for (LmKind kind : grid.lm_kinds)
    for (std::size_t k : grid.queue_sizes)
      for (double w : grid.lm_weights) {
        RunConfig cfg = base;
        cfg.lm_kind = kind;
        cfg.decoder.max_queue_size = k;
        cfg.decoder.lm_weight = w;
        cfg.subset = SubsetTag::all;
        result.rows.push_back({kind, k, w, evaluate(models, dev, cfg).mean});
      }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.lm_kind != b.lm_kind) return a.lm_kind < b.lm_kind;
    if (a.queue_size != b.queue_size) return a.queue_size < b.queue_size;
    return a.lm_weight < b.lm_weight;
  });
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    if (result.rows[i].mean_bleu > result.rows[result.best].mean_bleu) result.best = i;
  return result;
}

// ---------------------------------------------------------------------------
// Output. Machine-readable records are "key=value" lines with a fixed field
// order; the text form prints the same numbers rounded to four places.

inline std::string format_eval_kv(const EvalReport& r) {
  std::ostringstream os;
  for (const auto& [k, v] : r.config_echo) os << "config." << k << '=' << v << '\n';
  for (const auto& row : r.rows)
    os << "row id=" << row.id << " p1=" << detail::fmt_exact(row.bleu.p1) << " p2=" << detail::fmt_exact(row.bleu.p2)
       << " brevity=" << detail::fmt_exact(row.bleu.brevity) << " bleu2=" << detail::fmt_exact(row.bleu.score)
       << " pred_len=" << row.bleu.pred_len << " ref_len=" << row.bleu.ref_len << '\n';
  os << "count=" << r.rows.size() << '\n' << "mean_bleu2=" << detail::fmt_exact(r.mean) << '\n';
  return os.str();
}

inline std::string format_eval_text(const EvalReport& r) {
  std::ostringstream os;
  os << "# ";
  for (std::size_t i = 0; i < r.config_echo.size(); ++i)
    os << (i ? " " : "") << r.config_echo[i].first << '=' << r.config_echo[i].second;
  os << '\n';
  for (const auto& row : r.rows)
    os << row.id << "\tBLEU-2 " << detail::fmt_fixed(row.bleu.score) << "\t" << row.output.render() << "\t|| "
       << row.reference.render() << '\n';
  os << "Mean BLEU-2 over " << r.rows.size() << " sentences: " << detail::fmt_fixed(r.mean) << '\n';
  return os.str();
}

inline std::string format_sweep_kv(const SweepResult& s) {
  std::ostringstream os;
  for (const auto& row : s.rows)
    os << "row lm_kind=" << to_string(row.lm_kind) << " queue_size=" << row.queue_size
       << " lm_weight=" << detail::fmt_exact(row.lm_weight) << " mean_bleu2=" << detail::fmt_exact(row.mean_bleu)
       << '\n';
  os << "rows=" << s.rows.size() << '\n';
  const auto& b = s.rows[s.best];
  os << "best lm_kind=" << to_string(b.lm_kind) << " queue_size=" << b.queue_size
     << " lm_weight=" << detail::fmt_exact(b.lm_weight) << " mean_bleu2=" << detail::fmt_exact(b.mean_bleu) << '\n';
  return os.str();
}

inline std::string format_sweep_text(const SweepResult& s) {
  std::ostringstream os;
  os << "lm_kind\tqueue\tweight\tmean BLEU-2\n";
  for (const auto& row : s.rows)
    os << to_string(row.lm_kind) << '\t' << row.queue_size << '\t' << detail::fmt_fixed(row.lm_weight, 2) << '\t'
       << detail::fmt_fixed(row.mean_bleu) << '\n';
  const auto& b = s.rows[s.best];
  os << "best: " << to_string(b.lm_kind) << " k=" << b.queue_size << " W=" << detail::fmt_fixed(b.lm_weight, 2)
     << " -> " << detail::fmt_fixed(b.mean_bleu) << '\n';
  return os.str();
}

}  // namespace asltrans
