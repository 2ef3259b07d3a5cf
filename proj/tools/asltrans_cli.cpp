// asltrans: command-line driver for splitting corpora, training, translating,
// evaluating, running baselines and hyperparameter sweeps.
//
// Exit codes: 0 success, 1 usage error, 2 data or model error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asltrans/asltrans.hpp"

namespace {

using namespace asltrans;

// Shared flags are collected as strings and applied through RunConfig::set,
// after any --config file, so flags override the file.
struct SharedFlags {
  std::map<std::string, std::string> values;
  bool capped_brevity = false;
  std::string config_file;

  void add_to(CLI::App* cmd) {
    static const char* const names[] = {"direction", "lm-kind", "lm-weight", "queue-size", "fanout",
                                        "epsilon",   "seed",    "subset",    "comma-boost", "max-words-per-source",
                                        "priority-mode", "ngram-file", "helpers-file", "max-iterations", "tol"};
    for (const char* name : names) cmd->add_option(std::string("--") + name, values[name]);
    cmd->add_flag("--capped-brevity", capped_brevity, "Clamp the BLEU brevity factor at 1");
    cmd->add_option("--config", config_file, "key=value settings file (flags take precedence)");
  }

  RunConfig resolve(CLI::App* cmd) const {
    RunConfig cfg;
    if (!config_file.empty())
      for (const auto& [k, v] : read_config_file(config_file)) cfg.set(k, v);
    for (const auto& [name, value] : values)
      if (cmd->count("--" + name) > 0) cfg.set(name, value);
    if (capped_brevity) cfg.capped_brevity = true;
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void emit(const std::string& format, const std::string& text, const std::string& kv, const std::string& kv_out) {
  std::cout << (format == "kv" ? kv : text);
  if (!kv_out.empty()) {
    std::ofstream out(kv_out, std::ios::binary);
    if (!out) throw IoError(kv_out);
    out << kv;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ASL gloss <-> English statistical translation"};
  app.require_subcommand(1);

  SharedFlags flags;
  std::string corpus_path, out_dir, models_dir, input_path, test_path, dev_path, format = "text", kv_out;
  std::string grid_queues, grid_weights, grid_kinds;

  auto* split = app.add_subcommand("split", "Split a corpus into train/dev/test files");
  split->add_option("--corpus", corpus_path, "Corpus file")->required();
  split->add_option("--out", out_dir, "Output directory")->required();
  flags.add_to(split);

  auto* train = app.add_subcommand("train", "Train translation tables and language-model counts");
  train->add_option("--train", corpus_path, "Training corpus")->required();
  train->add_option("--out", out_dir, "Model directory")->required();
  flags.add_to(train);

  auto* translate = app.add_subcommand("translate", "Translate one sentence per input line");
  translate->add_option("--models", models_dir, "Model directory")->required();
  translate->add_option("--input", input_path, "Input file (default: standard input)");
  flags.add_to(translate);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Translate a test corpus and report BLEU-2");
  auto* baseline_cmd = app.add_subcommand("baseline", "Run the rule-based baseline and report BLEU-2");
  for (auto* cmd : {evaluate_cmd, baseline_cmd}) {
    cmd->add_option("--models", models_dir, "Model directory")->required();
    cmd->add_option("--test", test_path, "Test corpus")->required();
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "kv"}));
    cmd->add_option("--kv-out", kv_out, "Also write key=value records to this file");
    flags.add_to(cmd);
  }

  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search of queue size, LM weight and LM kind on a dev set");
  sweep_cmd->add_option("--models", models_dir, "Model directory")->required();
  sweep_cmd->add_option("--dev", dev_path, "Development corpus")->required();
  sweep_cmd->add_option("--queue-sizes", grid_queues, "Comma-separated queue sizes");
  sweep_cmd->add_option("--lm-weights", grid_weights, "Comma-separated LM weights");
  sweep_cmd->add_option("--lm-kinds", grid_kinds, "Comma-separated LM kinds");
  sweep_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "kv"}));
  sweep_cmd->add_option("--kv-out", kv_out, "Also write key=value records to this file");
  flags.add_to(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*split) {
      const RunConfig cfg = flags.resolve(split);
      const DatasetSplit parts = split_dataset(load_corpus(corpus_path), cfg.seed);
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path root(out_dir);
      save_corpus((root / "train.tsv").string(), parts.train);
      save_corpus((root / "dev.tsv").string(), parts.dev);
      save_corpus((root / "test.tsv").string(), parts.test);
      std::cout << "train=" << parts.train.size() << " dev=" << parts.dev.size() << " test=" << parts.test.size()
                << " seed=" << cfg.seed << '\n';
    } else if (*train) {
      const RunConfig cfg = flags.resolve(train);
      const Corpus corpus = load_corpus(corpus_path);
      const TrainReport report = train_models(corpus, cfg.em);
      save_models(out_dir, report, cfg.em);
      auto line = [](const char* tag, const TrainSummary& s) {
        std::cout << tag << ": iterations=" << s.iterations << " converged=" << (s.converged ? "yes" : "no")
                  << " final_loglik=" << s.final_loglik << '\n';
      };
      line("sign_given_english", report.sign_given_english);
      line("english_given_sign", report.english_given_sign);
    } else if (*translate) {
      const RunConfig cfg = flags.resolve(translate);
      const ModelBundle models = load_models(models_dir);
      std::ifstream file;
      if (!input_path.empty()) {
        file.open(input_path);
        if (!file) throw IoError(input_path);
      }
      std::istream& in = input_path.empty() ? std::cin : file;
      std::vector<TokenSequence> sources;
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        sources.push_back(tokenize_source(line, cfg.direction));
      }
      for (const auto& out : translate_all(models, cfg, sources)) std::cout << out.render() << '\n';
    } else if (*evaluate_cmd || *baseline_cmd) {
      auto* cmd = *evaluate_cmd ? evaluate_cmd : baseline_cmd;
      const RunConfig cfg = flags.resolve(cmd);
      const ModelBundle models = load_models(models_dir);
      const Corpus test = load_corpus(test_path);
      const EvalReport report =
          *evaluate_cmd ? evaluate(models, test, cfg) : evaluate_baseline(models, test, cfg);
      emit(format, format_eval_text(report), format_eval_kv(report), kv_out);
    } else if (*sweep_cmd) {
      const RunConfig cfg = flags.resolve(sweep_cmd);
      SweepGrid grid = SweepGrid::defaults(cfg.direction);
      if (!grid_queues.empty()) {
        grid.queue_sizes.clear();
        for (const auto& q : split_list(grid_queues)) grid.queue_sizes.push_back(std::stoul(q));
      }
      if (!grid_weights.empty()) {
        grid.lm_weights.clear();
        for (const auto& w : split_list(grid_weights)) grid.lm_weights.push_back(std::stod(w));
      }
      if (!grid_kinds.empty()) {
        grid.lm_kinds.clear();
        for (const auto& k : split_list(grid_kinds)) grid.lm_kinds.push_back(parse_lm_kind(k));
      }
      const SweepResult result = sweep(load_models(models_dir), load_corpus(dev_path), cfg, grid);
      emit(format, format_sweep_text(result), format_sweep_kv(result), kv_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
