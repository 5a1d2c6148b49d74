// hnnkws command-line tool: gen-data, train, decode, roc, complexity.
//
// Every subcommand accepts --config <file.json> (a RunConfig document) and
// --seed; flags given on the command line override the file.
//
// Exit codes: 0 success, 1 invalid config, 2 I/O failure, 3 numerical failure.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hnnkws/error.hpp"
#include "hnnkws/pipeline.hpp"

namespace {

using namespace hnnkws;

enum Exit { kOk = 0, kConfig = 1, kIo = 2, kNumerical = 3 };

// Command-line overrides; unset fields leave the config untouched.
struct Flags {
  std::string config;
  bool print_config = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> data_dir, out_dir, model, corpus, catalog, out;
  std::vector<std::string> models;
  // corpus
  std::optional<int> utts_per_env;
  std::optional<double> test_hours, positive_fraction, noise_quiet, noise_video, noise_incar;
  // model / training
  std::optional<std::string> topology, wiring;
  std::optional<int> epochs, batch, frame_stride;
  std::optional<double> lr;
  // decoding
  std::vector<std::string> strategies;
  std::optional<std::string> outputs;
  std::optional<int> smooth, max_gap, refractory, threads;
  std::optional<double> threshold;
  std::vector<double> fa_points;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration; command-line flags override it");
  cmd->add_option("--seed", f.seed, "Global seed (corpus, initialization, shuffling)");
  cmd->add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
}

void add_decoder(CLI::App* cmd, Flags& f) {
  cmd->add_option("--smooth", f.smooth, "Posterior smoothing window (frames)");
  cmd->add_option("--threshold", f.threshold, "Frame class threshold in (0, 1)");
  cmd->add_option("--max-gap", f.max_gap, "Silence/other frames tolerated between word states");
  cmd->add_option("--refractory", f.refractory, "Frames after a wake before re-arming");
  cmd->add_option("--outputs", f.outputs, "Inference outputs: third (pruned) or all")
      ->check(CLI::IsMember({"third", "all"}));
  cmd->add_option("--threads", f.threads, "Worker threads for decoding");
  cmd->add_option("--corpus", f.corpus, "Corpus to decode (default: <data-dir>/test.corpus)");
}

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? default_run_config() : load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.data_dir) cfg.data_dir = *f.data_dir;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.model) cfg.model = *f.model;
  if (!f.models.empty()) cfg.models.assign(f.models.begin(), f.models.end());
  if (f.corpus) cfg.corpus_file = *f.corpus;
  if (f.catalog) cfg.catalog = *f.catalog;
  if (f.utts_per_env) cfg.corpus.set_utts_per_env(*f.utts_per_env);
  if (f.test_hours) cfg.corpus.test_hours = *f.test_hours;
  if (f.positive_fraction) cfg.corpus.test_positive_fraction = *f.positive_fraction;
  if (f.noise_quiet) cfg.corpus.noise[0] = *f.noise_quiet;
  if (f.noise_video) cfg.corpus.noise[1] = *f.noise_video;
  if (f.noise_incar) cfg.corpus.noise[2] = *f.noise_incar;
  if (f.topology) {
    cfg.topology = *f.topology;
    cfg.inline_topology.reset();
  }
  if (f.wiring) cfg.wiring = wiring_from_string(*f.wiring);
  for (TrainHyper* h : {&cfg.levels[0], &cfg.levels[1], &cfg.levels[2], &cfg.baseline}) {
    if (f.epochs) h->epochs = *f.epochs;
    if (f.batch) h->batch = *f.batch;
    if (f.frame_stride) h->frame_stride = *f.frame_stride;
    if (f.lr) h->lr = *f.lr;
  }
  if (!f.strategies.empty()) {
    cfg.strategies.clear();
    for (const auto& s : f.strategies) cfg.strategies.push_back(strategy_from_string(s));
  }
  if (f.outputs) {
    cfg.outputs = output_mode_from_string(*f.outputs);
    // Averaging is the default strategy of all-level inference; a config file
    // or --strategy that already picked a strategy keeps it.
    const bool default_strategy =
        cfg.strategies == std::vector<CombinationStrategy>{CombinationStrategy::ThirdOnly};
    if (*cfg.outputs == OutputMode::AllLevels && f.strategies.empty() && default_strategy) {
      cfg.strategies = {CombinationStrategy::AveragePosteriors};
    }
  }
  if (f.smooth) cfg.decoder.smooth_window = *f.smooth;
  if (f.threshold) cfg.decoder.class_threshold = *f.threshold;
  if (f.max_gap) cfg.decoder.max_gap = *f.max_gap;
  if (f.refractory) cfg.decoder.refractory = *f.refractory;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.fa_points.empty()) cfg.fa_points = f.fa_points;
  resolve(cfg);
  return cfg;
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "hnnkws: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical keyword-spotting toolkit"};
  app.set_version_flag("--version", std::string(HNNKWS_VERSION));
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic train/test corpora");
  add_common(gen, f);
  gen->add_option("--data-dir,--out", f.data_dir, "Output directory for the corpora");
  gen->add_option("--utts-per-env", f.utts_per_env, "Training utterances per environment");
  gen->add_option("--test-hours", f.test_hours, "Duration of the test corpus");
  gen->add_option("--positive-fraction", f.positive_fraction, "Share of keyword utterances in the test set");
  gen->add_option("--noise-quiet", f.noise_quiet, "Noise scale of the quiet environment");
  gen->add_option("--noise-video", f.noise_video, "Noise scale of the video environment");
  gen->add_option("--noise-incar", f.noise_incar, "Noise scale of the in-car environment");

  auto* train = app.add_subcommand("train", "Train a catalog topology on the generated corpora");
  add_common(train, f);
  train->add_option("--data-dir", f.data_dir, "Directory holding train/<env>.corpus");
  train->add_option("--model", f.model, "Output model file");
  train->add_option("--topology", f.topology, "Catalog entry (HNN1, HNN2, HNN3, MHNN, DNN, CNN1..CNN5)");
  train->add_option("--wiring", f.wiring, "Bottleneck wiring of hierarchical models")
      ->check(CLI::IsMember({"all_bn", "one_bn"}));
  train->add_option("--catalog", f.catalog, "Topology catalog file (default: built-in)");
  train->add_option("--epochs", f.epochs, "Epochs per trained unit");
  train->add_option("--lr", f.lr, "Learning rate");
  train->add_option("--batch", f.batch, "Minibatch size");
  train->add_option("--frame-stride", f.frame_stride, "Train on every n-th frame");

  auto* decode = app.add_subcommand("decode", "Decode a corpus into per-utterance wake decisions");
  add_common(decode, f);
  add_decoder(decode, f);
  decode->add_option("--data-dir", f.data_dir, "Directory holding test.corpus");
  decode->add_option("--model", f.model, "Trained model file");
  decode->add_option("--strategy", f.strategies, "Combination strategy: third, any or avg")
      ->expected(1)
      ->check(CLI::IsMember({"third", "any", "avg"}));
  decode->add_option("--out", f.out, "Decision CSV (default: <out-dir>/decisions.csv)");
  decode->add_option("--out-dir", f.out_dir, "Output directory");

  auto* roc = app.add_subcommand("roc", "Sweep ROC curves and summarize operating points");
  add_common(roc, f);
  add_decoder(roc, f);
  roc->add_option("--data-dir", f.data_dir, "Directory holding test.corpus");
  roc->add_option("--model", f.models, "Trained model file (repeat to compare models)");
  roc->add_option("--strategy", f.strategies, "Strategies to sweep (repeatable): third, any, avg")
      ->delimiter(',')
      ->check(CLI::IsMember({"third", "any", "avg"}));
  roc->add_option("--fa-points", f.fa_points, "FA/hour operating points for summary.csv")->delimiter(',');
  roc->add_option("--out-dir", f.out_dir, "Directory for roc.csv and summary.csv");

  auto* complexity = app.add_subcommand("complexity", "Write per-topology MAC and parameter counts");
  add_common(complexity, f);
  complexity->add_option("--catalog", f.catalog, "Topology catalog file (default: built-in)");
  complexity->add_option("--out-dir", f.out_dir, "Directory for complexity.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const RunConfig cfg = resolve_config(f);
    if (f.print_config) {
      std::cout << to_json(cfg).dump(2) << '\n';
      return kOk;
    }
    if (gen->parsed()) cmd_gen_data(cfg, std::cerr);
    if (train->parsed()) cmd_train(cfg, std::cerr);
    if (decode->parsed()) cmd_decode(cfg, std::cerr, f.out ? std::filesystem::path(*f.out) : cfg.out_dir / "decisions.csv");
    if (roc->parsed()) cmd_roc(cfg, std::cerr);
    if (complexity->parsed()) cmd_complexity(cfg, std::cerr);
  } catch (const NumericalError& e) {
    return report("numerical failure", e, kNumerical);
  } catch (const IoError& e) {
    return report("I/O error", e, kIo);
  } catch (const Error& e) {
    return report("invalid configuration", e, kConfig);
  } catch (const std::filesystem::filesystem_error& e) {
    return report("I/O error", e, kIo);
  } catch (const std::exception& e) {
    return report("error", e, kIo);
  }
  return kOk;
}
