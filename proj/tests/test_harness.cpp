#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "asltrans/harness.hpp"

using namespace asltrans;
namespace fs = std::filesystem;

namespace {

struct Trained {
  DatasetSplit split;
  TrainReport report;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained out;
    out.split = split_dataset(load_corpus(std::string(ASLTRANS_DATA_DIR) + "/mini_corpus.tsv"), 0);
    out.report = train_models(out.split.train, EmConfig{});
    return out;
  }();
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("asltrans_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(RunConfigTest, SetAndValidate) {
  RunConfig c;
  EXPECT_EQ(c.decoder.lm_weight, 0.1);
  EXPECT_EQ(c.decoder.max_queue_size, 20u);
  EXPECT_EQ(c.lm_kind, LmKind::trigram);
  c.set("direction", "eng-to-asl");
  c.set("lm_weight", "0.3");
  c.set("queue-size", "13");
  c.set("epsilon", "0.5");
  c.set("capped-brevity", "yes");
  c.set("subset", "comma");
  c.set("priority-mode", "log-of-sum");
  EXPECT_EQ(c.direction, TranslationDirection::eng_to_asl);
  EXPECT_EQ(c.effective_lm_kind(), LmKind::unigram);
  EXPECT_EQ(c.decoder.lm_weight, 0.3);
  EXPECT_EQ(c.decoder.max_queue_size, 13u);
  EXPECT_EQ(c.decoder.epsilon, 0.5);
  EXPECT_EQ(c.em.epsilon, 0.5);
  EXPECT_TRUE(c.capped_brevity);
  EXPECT_EQ(c.subset, SubsetTag::comma);
  EXPECT_EQ(c.decoder.mode, PriorityMode::log_of_sum);
  EXPECT_THROW(c.set("queue-size", "2.5"), DataError);
  EXPECT_THROW(c.set("lm-weight", "abc"), DataError);
  EXPECT_THROW(c.set("no-such-key", "1"), DataError);
  EXPECT_THROW(c.set("lm-kind", "fourgram"), DataError);
  c.set("queue-size", "0");
  EXPECT_THROW(c.validate(), DataError);
}

TEST(RunConfigTest, ConfigFile) {
  const auto dir = scratch("config");
  {
    std::ofstream out(dir / "run.cfg");
    out << "# comment\n\nlm-kind = bigram\nseed=7\n";
  }
  const auto kv = read_config_file((dir / "run.cfg").string());
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"lm-kind", "bigram"}));
  {
    std::ofstream out(dir / "bad.cfg");
    out << "seed=1\nnonsense\n";
  }
  try {
    read_config_file((dir / "bad.cfg").string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(read_config_file((dir / "missing.cfg").string()), IoError);
}

TEST(Harness, TrainReportsAreSane) {
  const auto& r = trained().report;
  EXPECT_GE(r.sign_given_english.iterations, 1);
  EXPECT_GE(r.english_given_sign.iterations, 1);
  EXPECT_TRUE(std::isfinite(r.sign_given_english.final_loglik));
  EXPECT_EQ(r.models.english_counts.size(), 3u);
  EXPECT_FALSE(r.models.sign_counts.empty());
  EXPECT_THROW(train_models(Corpus{}, EmConfig{}), DataError);
}

TEST(Harness, EvaluateMeanIsRowAverage) {
  for (auto dir : {TranslationDirection::asl_to_eng, TranslationDirection::eng_to_asl}) {
    RunConfig cfg;
    cfg.direction = dir;
    const auto rep = evaluate(trained().report.models, trained().split.test, cfg);
    ASSERT_EQ(rep.rows.size(), trained().split.test.size());
    double total = 0;
    for (const auto& row : rep.rows) {
      EXPECT_GE(row.bleu.score, 0.0);
      total += row.bleu.score;
    }
    EXPECT_DOUBLE_EQ(rep.mean, total / rep.rows.size());
  }
}

TEST(Harness, SubsetsAndErrors) {
  RunConfig cfg;
  cfg.capped_brevity = true;
  cfg.subset = SubsetTag::comma;
  const auto rep = evaluate(trained().report.models, trained().split.test, cfg);
  for (const auto& row : rep.rows) EXPECT_GT(row.source.count(TokenKind::comma), 0u);
  EXPECT_GE(rep.mean, 0.0);
  EXPECT_LE(rep.mean, 1.0);

  Corpus plain;
  plain.pairs.push_back({"1", tokenize_asl("HOUSE"), tokenize_english("house"), "HOUSE", "house"});
  cfg.subset = SubsetTag::gesture;
  try {
    evaluate(trained().report.models, plain, cfg);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no matching pairs"), std::string::npos);
  }
  cfg.subset = SubsetTag::all;
  EXPECT_THROW(evaluate(trained().report.models, Corpus{}, cfg), DataError);
}

TEST(Harness, BaselinesRun) {
  for (auto dir : {TranslationDirection::asl_to_eng, TranslationDirection::eng_to_asl}) {
    RunConfig cfg;
    cfg.direction = dir;
    const auto rep = evaluate_baseline(trained().report.models, trained().split.test, cfg);
    EXPECT_EQ(rep.rows.size(), trained().split.test.size());
    EXPECT_EQ(rep.config_echo.front().second, "baseline");
    for (const auto& row : rep.rows) EXPECT_FALSE(row.output.empty());
  }
}

TEST(Harness, SweepShapeAndDeterminism) {
  RunConfig cfg;
  const auto& m = trained().report.models;
  const auto& dev = trained().split.dev;
  const auto a = sweep(m, dev, cfg, SweepGrid::defaults(cfg.direction));
  EXPECT_EQ(a.rows.size(), 18u);
  const auto b = sweep(m, dev, cfg, SweepGrid::defaults(cfg.direction));
  EXPECT_EQ(format_sweep_kv(a), format_sweep_kv(b));
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_LE(a.rows[i].mean_bleu, a.rows[a.best].mean_bleu);

  cfg.direction = TranslationDirection::eng_to_asl;
  EXPECT_EQ(sweep(m, dev, cfg, SweepGrid::defaults(cfg.direction)).rows.size(), 9u);
  EXPECT_THROW(sweep(m, dev, cfg, SweepGrid{}), DataError);
}

TEST(Harness, SavedModelsReproduceResults) {
  const auto dir = scratch("models");
  save_models(dir.string(), trained().report, EmConfig{});
  const auto loaded = load_models(dir.string());
  EXPECT_EQ(loaded.sign_given_english, trained().report.models.sign_given_english);
  EXPECT_EQ(loaded.english_given_sign, trained().report.models.english_given_sign);
  EXPECT_EQ(loaded.sign_counts, trained().report.models.sign_counts);
  EXPECT_EQ(loaded.english_counts, trained().report.models.english_counts);

  for (auto d : {TranslationDirection::asl_to_eng, TranslationDirection::eng_to_asl}) {
    RunConfig cfg;
    cfg.direction = d;
    const auto x = format_eval_kv(evaluate(trained().report.models, trained().split.test, cfg));
    const auto y = format_eval_kv(evaluate(loaded, trained().split.test, cfg));
    EXPECT_EQ(x, y);
  }

  const auto again = scratch("models_again");
  save_models(again.string(), trained().report, EmConfig{});
  for (const auto& entry : fs::directory_iterator(dir))
    EXPECT_EQ(slurp(entry.path()), slurp(again / entry.path().filename())) << entry.path();
  EXPECT_THROW(load_models((dir / "nowhere").string()), IoError);
}

TEST(Harness, ExternalNgramFileOverridesTrainedCounts) {
  const auto dir = scratch("ngram");
  {
    std::ofstream out(dir / "bi.counts");
    out << "5\t<s> house\n";
  }
  RunConfig cfg;
  cfg.ngram_file = (dir / "bi.counts").string();
  const auto lm = english_model(trained().report.models, cfg, LmKind::bigram);
  EXPECT_EQ(lm.size(), 1u);
}

TEST(Harness, OutputFormats) {
  RunConfig cfg;
  const auto rep = evaluate(trained().report.models, trained().split.dev, cfg);
  const auto kv = format_eval_kv(rep);
  EXPECT_NE(kv.find("config.lm_kind=trigram"), std::string::npos);
  EXPECT_NE(kv.find("count=" + std::to_string(rep.rows.size())), std::string::npos);
  EXPECT_NE(format_eval_text(rep).find("Mean BLEU-2 over"), std::string::npos);
}
