#pragma once

// Command layer shared by the CLI and the Python module: the resolved run
// configuration and the gen-data / train / decode / roc / complexity commands.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hnnkws/catalog.hpp"
#include "hnnkws/data_synth.hpp"
#include "hnnkws/decoder.hpp"
#include "hnnkws/eval.hpp"
#include "hnnkws/hnn.hpp"

namespace hnnkws {

struct RunConfig {
  std::uint64_t seed = 42;  // corpus seed; model and training seeds derive from it
  CorpusConfig corpus;
  std::string topology = "HNN1";
  std::optional<HnnTopology> inline_topology;
  std::optional<BnWiring> wiring;
  std::array<TrainHyper, 3> levels;  // per HNN level
  TrainHyper baseline;               // single-network models
  DecoderParams decoder;
  std::vector<CombinationStrategy> strategies{CombinationStrategy::ThirdOnly};
  std::optional<OutputMode> outputs;  // unset: AllLevels only when a strategy needs it
  std::vector<double> fa_points{0.5, 1.0, 2.0, 5.0};
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  std::filesystem::path model = "out/model.json";
  std::vector<std::filesystem::path> models;  // roc: models to compare (default: `model`)
  std::optional<std::filesystem::path> corpus_file;  // decode/roc input (default: data_dir/test.corpus)
  std::optional<std::filesystem::path> catalog;      // default: built-in catalog
  int threads = 1;
};

RunConfig default_run_config();

// Applies the global seed to the corpus and training streams and checks every field.
void resolve(RunConfig& cfg);
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
// Fields missing from `j` keep the values already in `cfg`. Unknown keys are errors.
void merge_json(RunConfig& cfg, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Inference mode used for the configured strategies. Throws ConfigError when an
// explicit ThirdOnly mode is combined with a strategy needing every level.
OutputMode inference_mode(const RunConfig& cfg);

// Untrained model for the configured topology.
KwsModel build_configured_model(const RunConfig& cfg);

// Staged training: HNN levels 1 -> 3 on their own environments, baselines on
// all three corpora. `log` receives one line per epoch.
void train_model(KwsModel& model, const std::array<Corpus, 3>& train, const RunConfig& cfg,
                 std::ostream* log = nullptr);

// Decisions for each strategy, utterances in corpus order. Single networks
// decode their one stream under every strategy.
std::vector<std::vector<DecodedUtterance>> decode_corpus_with(const KwsModel& model,
                                                              const Corpus& corpus,
                                                              std::span<const CombinationStrategy> strategies,
                                                              OutputMode outputs,
                                                              const DecoderParams& params,
                                                              int threads = 1);

std::vector<ScoredUtterance> scored(const Corpus& corpus, std::span<const DecodedUtterance> decoded);

std::filesystem::path train_corpus_path(const std::filesystem::path& data_dir, Environment env);
std::filesystem::path test_corpus_path(const std::filesystem::path& data_dir);

void cmd_gen_data(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_decode(const RunConfig& cfg, std::ostream& log, const std::filesystem::path& out_csv);
void cmd_roc(const RunConfig& cfg, std::ostream& log);
void cmd_complexity(const RunConfig& cfg, std::ostream& log);

}  // namespace hnnkws
