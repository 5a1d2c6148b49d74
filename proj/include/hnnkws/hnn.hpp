#pragma once

// Hierarchical network: three levels, each trained on its own environment.
// Levels 1 and 2 carry a bottleneck layer whose (post-ReLU) activation is
// appended to the raw window as extra input for the levels above:
//   level 2 input = raw window + BN1
//   level 3 input = raw window + BN1 + BN2  (AllBn)
//                 = raw window + BN2        (OneBn)
// A level may instead start with a convolutional front end over the raw
// window; lower-level bottleneck features are then appended to the pooled
// front-end output.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hnnkws/data_synth.hpp"
#include "hnnkws/nn.hpp"
#include "hnnkws/types.hpp"

namespace hnnkws {

struct ConvFrontEnd {
  KernelSpec kernel;
  int pool_to = 0;  // flattened size after max pooling
  bool operator==(const ConvFrontEnd&) const = default;
};

struct LevelSpec {
  std::vector<int> ah;  // hidden widths before the bottleneck
  std::optional<int> bn;
  std::vector<int> bh;  // hidden widths after the bottleneck
  bool has_output = true;
  std::optional<ConvFrontEnd> conv;
  bool operator==(const LevelSpec&) const = default;
};

enum class BnWiring { AllBn, OneBn };

std::string_view to_string(BnWiring wiring);
BnWiring wiring_from_string(std::string_view name);

struct HnnTopology {
  std::string name;
  std::array<LevelSpec, 3> levels;
  BnWiring wiring = BnWiring::AllBn;
  std::array<Environment, 3> env_schedule{Environment::Quiet, Environment::Video,
                                          Environment::Incar};
  int num_classes = kNumClasses;
  bool operator==(const HnnTopology&) const = default;
};

// Throws ConfigError naming the offending level.
void validate(const HnnTopology& topology);

// Bottleneck widths wired into the given level (1-based), in concatenation order.
std::vector<int> wired_bottlenecks(const HnnTopology& topology, int level);

// One trainable unit: optional front end over the raw window, then the
// softmax-terminated body over [front output or raw window, extra features].
struct LevelNet {
  std::optional<Network> front;
  Network body;
  int bottleneck_layer = -1;  // body index of the bottleneck ReLU, -1 when absent
  int extra_dim = 0;          // appended feature width
  std::map<std::string, std::string> metadata;

  std::size_t body_input_dim() const { return body.input_shape().size(); }
  bool operator==(const LevelNet&) const = default;
};

struct TrainingRecord {
  std::vector<Environment> envs;  // data the unit was trained on
  bool trained = false;
  std::vector<double> epoch_loss;
  std::size_t samples_per_epoch = 0;
  double lr = 0.0;
  int batch = 0;
  std::uint64_t seed = 0;
  bool operator==(const TrainingRecord&) const = default;
};

struct HnnLevel {
  LevelNet net;
  TrainingRecord log;
  bool operator==(const HnnLevel&) const = default;
};

struct HnnModel {
  HnnTopology topology;
  std::array<HnnLevel, 3> levels;
  std::uint64_t seed = 0;
  bool operator==(const HnnModel&) const = default;
};

struct TrainHyper {
  double lr = 0.05;
  int epochs = 3;
  int batch = 32;
  std::uint64_t seed = 1;
  int frame_stride = 3;  // train on every n-th frame of each utterance
  bool operator==(const TrainHyper&) const = default;
};

HnnModel build_hnn(const HnnTopology& topology, std::uint64_t seed);

// Trains one level (1-based) on `corpus`, keeping all other levels frozen.
// Lower levels must already be trained and higher levels untrained; every
// utterance must come from env_schedule[level].
void train_level(HnnModel& model, int level, const Corpus& corpus, const TrainHyper& hyper);

// Post-activation bottleneck of level 1 or 2 for one raw window.
std::vector<float> extract_bottleneck(const HnnModel& model, int level,
                                      std::span<const float> window);

// Posterior per level; ThirdOnly runs levels 1-2 only up to their bottleneck.
using LevelPosteriors = std::array<std::optional<PosteriorFrame>, 3>;

LevelPosteriors hnn_forward(const HnnModel& model, std::span<const float> window,
                            OutputMode outputs);

// Batched form over `rows` windows stored back to back.
std::vector<LevelPosteriors> hnn_forward_rows(const HnnModel& model, std::span<const float> windows,
                                              std::size_t rows, OutputMode outputs);

// MACs / parameters actually used by hnn_forward in the given mode.
std::uint64_t hnn_macs(const HnnModel& model, OutputMode outputs);
std::uint64_t hnn_params(const HnnModel& model, OutputMode outputs);

// ThirdOnly -> level-3 frame; AveragePosteriors -> per-class mean;
// AnyLevelWakes -> all three frames (the OR happens in the decoder).
std::vector<PosteriorFrame> combine_posteriors(const LevelPosteriors& frames,
                                               CombinationStrategy strategy);

// Single-network comparison model (DNN or CNN).
struct BaselineModel {
  std::string name;
  LevelNet net;
  TrainingRecord log;
  std::uint64_t seed = 0;
  bool operator==(const BaselineModel&) const = default;
};

using KwsModel = std::variant<BaselineModel, HnnModel>;

enum class BaselineKind { DNN, CNN1, CNN2, CNN3, CNN4, CNN5, MHNN };

std::string_view to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(std::string_view name);

// DNN and CNNk give a BaselineModel; MHNN gives an HnnModel.
KwsModel build_baseline(BaselineKind kind, std::uint64_t seed);

// Trains a baseline on the union of `corpora`.
void train_baseline(BaselineModel& model, std::span<const Corpus> corpora,
                    const TrainHyper& hyper);

PosteriorFrame baseline_forward(const BaselineModel& model, std::span<const float> window);
std::vector<PosteriorFrame> baseline_forward_rows(const BaselineModel& model,
                                                  std::span<const float> windows, std::size_t rows);

// Builders shared by the catalog.
LevelNet make_dense_net(const std::vector<int>& hidden, int num_classes, std::uint64_t seed);
LevelNet make_cnn_net(const KernelSpec& kernel, const std::vector<int>& hidden, int num_classes,
                      std::uint64_t seed);

std::uint64_t level_macs(const LevelNet& net);
std::uint64_t level_params(const LevelNet& net);

}  // namespace hnnkws
