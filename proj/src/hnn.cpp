#include "hnnkws/hnn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "hnnkws/catalog.hpp"
#include "hnnkws/error.hpp"
#include "hnnkws/rng.hpp"

namespace hnnkws {

namespace {

constexpr Shape kWindowShape{1, kWindowFrames, kFrameDim};

std::string level_name(int level) { return "level " + std::to_string(level); }

void check_level(int level) {
  if (level < 1 || level > 3) throw ConfigError("level must be 1, 2 or 3");
}

// Dense stack of ReLU layers followed by a softmax output. Returns the body
// and the index of the bottleneck ReLU (or -1).
std::pair<std::vector<LayerSpec>, int> dense_body(int input_dim, const LevelSpec& spec,
                                                  int num_classes) {
  std::vector<LayerSpec> layers;
  int width = input_dim;
  const auto push = [&](int out) {
    layers.push_back(LayerSpec::affine(width, out));
    layers.push_back(LayerSpec::relu());
    width = out;
  };
  for (int w : spec.ah) push(w);
  int bottleneck = -1;
  if (spec.bn) {
    push(*spec.bn);
    bottleneck = static_cast<int>(layers.size()) - 1;
  }
  for (int w : spec.bh) push(w);
  layers.push_back(LayerSpec::affine(width, num_classes));
  layers.push_back(LayerSpec::softmax());
  return {std::move(layers), bottleneck};
}

// Non-overlapping pool window that reduces `in` to exactly `target` values.
// Prefers the smallest window, then pooling more along time.
PoolSpec pool_geometry(const Shape& in, int target) {
  std::optional<PoolSpec> best;
  for (int pl = 1; pl <= in.length; ++pl) {
    for (int ph = 1; ph <= in.height; ++ph) {
      const long size = static_cast<long>(in.channels) * (in.length / pl) * (in.height / ph);
      if (size != target) continue;
      const PoolSpec cand{pl, ph};
      if (!best || std::max(pl, ph) < std::max(best->length, best->height) ||
          (std::max(pl, ph) == std::max(best->length, best->height) && pl > best->length)) {
        best = cand;
      }
    }
  }
  if (!best) {
    throw ConfigError("no max-pool window reduces " + std::to_string(in.channels) + "x" +
                      std::to_string(in.length) + "x" + std::to_string(in.height) + " to " +
                      std::to_string(target) + " values");
  }
  return *best;
}

LevelNet make_level_net(const LevelSpec& spec, int extra_dim, int num_classes,
                        std::uint64_t seed) {
  LevelNet net;
  int front_dim = kWindowDim;
  if (spec.conv) {
    const LayerSpec conv = LayerSpec::conv2d(spec.conv->kernel);
    const Shape conv_out = output_shape(conv, kWindowShape);
    const PoolSpec pool = pool_geometry(conv_out, spec.conv->pool_to);
    net.front = Network(kWindowShape, {conv, LayerSpec::relu(), LayerSpec::max_pool(pool)});
    init_glorot(*net.front, derive_seed(seed, 1));
    front_dim = spec.conv->pool_to;
    net.metadata["pool_geometry"] = std::to_string(pool.length) + "x" + std::to_string(pool.height);
  }
  auto [layers, bottleneck] = dense_body(front_dim + extra_dim, spec, num_classes);
  net.body = Network(Shape::flat(front_dim + extra_dim), std::move(layers));
  init_glorot(net.body, derive_seed(seed, 2));
  net.bottleneck_layer = bottleneck;
  net.extra_dim = extra_dim;
  return net;
}

// Row-wise concatenation of two row-major blocks.
void concat_rows(std::span<const float> a, std::size_t a_cols, std::span<const float> b,
                 std::size_t b_cols, std::size_t rows, std::vector<float>& out) {
  out.resize(rows * (a_cols + b_cols));
  for (std::size_t r = 0; r < rows; ++r) {
    float* dst = out.data() + r * (a_cols + b_cols);
    std::copy_n(a.data() + r * a_cols, a_cols, dst);
    if (b_cols > 0) std::copy_n(b.data() + r * b_cols, b_cols, dst + a_cols);
  }
}

// Body input rows = (front output or raw window) followed by `extras`.
void body_input(const LevelNet& net, std::span<const float> raw, std::span<const float> extras,
                std::size_t rows, Activations<float>& front_acts, std::vector<float>& out) {
  std::span<const float> head = raw;
  if (net.front) {
    forward_rows(*net.front, raw, rows, front_acts, net.front->num_layers());
    head = front_acts.back();
  }
  const std::size_t head_cols = head.size() / rows;
  concat_rows(head, head_cols, extras, static_cast<std::size_t>(net.extra_dim), rows, out);
}

PosteriorFrame to_posterior(std::span<const float> probs) {
  PosteriorFrame p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c] = static_cast<double>(probs[c]);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

struct SampleRef {
  std::uint32_t corpus;
  std::uint32_t utterance;
  std::uint32_t frame;
};

// Fills `out` with the frozen-level features for `rows` raw windows.
using ExtraFeatures =
    std::function<void(std::span<const float> raw, std::size_t rows, std::vector<float>& out)>;

// Minibatch SGD on one LevelNet. Every gradient is averaged over the batch.
void train_unit(LevelNet& net, std::span<const Corpus> corpora, const ExtraFeatures& extras,
                const TrainHyper& hyper, std::uint64_t stream, TrainingRecord& record) {
  if (hyper.epochs < 0 || hyper.batch < 1 || hyper.frame_stride < 1 || !(hyper.lr >= 0.0)) {
    throw ConfigError("invalid training hyperparameters");
  }
  std::vector<SampleRef> samples;
  for (std::uint32_t c = 0; c < corpora.size(); ++c) {
    const auto& utts = corpora[c].utterances;
    for (std::uint32_t u = 0; u < utts.size(); ++u) {
      for (std::uint32_t t = 0; t < utts[u].num_frames();
           t += static_cast<std::uint32_t>(hyper.frame_stride)) {
        samples.push_back({c, u, t});
      }
    }
  }
  if (samples.empty()) throw ConfigError("training corpus has no frames");

  Rng rng(derive_seed(hyper.seed, stream));
  Gradients<float> body_grads = zero_gradients(net.body);
  Gradients<float> front_grads;
  if (net.front) front_grads = zero_gradients(*net.front);

  const auto batch = static_cast<std::size_t>(hyper.batch);
  std::vector<float> raw(batch * kWindowDim);
  std::vector<int> targets(batch);
  std::vector<float> extra;
  std::vector<float> input;
  std::vector<float> input_grad;
  std::vector<float> front_grad;
  Activations<float> front_acts;
  Activations<float> body_acts;
  const std::size_t body_dim = net.body_input_dim();
  const std::size_t front_dim = body_dim - static_cast<std::size_t>(net.extra_dim);

  record.epoch_loss.clear();
  record.samples_per_epoch = samples.size();
  record.lr = hyper.lr;
  record.batch = hyper.batch;
  record.seed = hyper.seed;

  const auto zero = [](Gradients<float>& grads) {
    for (auto& g : grads) {
      std::fill(g.weights.begin(), g.weights.end(), 0.0f);
      std::fill(g.biases.begin(), g.biases.end(), 0.0f);
    }
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(std::span<SampleRef>(samples));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += batch) {
      const std::size_t rows = std::min(samples.size() - start, batch);
      for (std::size_t r = 0; r < rows; ++r) {
        const SampleRef& ref = samples[start + r];
        const Utterance& utt = corpora[ref.corpus].utterances[ref.utterance];
        fill_window(utt, ref.frame, std::span<float>(raw).subspan(r * kWindowDim, kWindowDim));
        targets[r] = static_cast<int>(utt.labels[ref.frame]);
      }
      const std::span<const float> raw_rows(raw.data(), rows * kWindowDim);
      extra.clear();
      if (extras) extras(raw_rows, rows, extra);
      body_input(net, raw_rows, extra, rows, front_acts, input);
      forward_rows(net.body, std::span<const float>(input), rows, body_acts, net.body.num_layers());
      loss_sum += accumulate_backward_rows(net.body, std::span<const float>(input), rows, body_acts,
                                           std::span<const int>(targets.data(), rows), body_grads,
                                           net.front ? &input_grad : nullptr);
      if (net.front) {
        front_grad.resize(rows * front_dim);
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(input_grad.data() + r * body_dim, front_dim, front_grad.data() + r * front_dim);
        }
        accumulate_backprop_rows(*net.front, raw_rows, rows, front_acts,
                                 std::span<const float>(front_grad), front_grads);
      }
      const float step = static_cast<float>(hyper.lr / static_cast<double>(rows));
      sgd_step(net.body, body_grads, step);
      zero(body_grads);
      if (net.front) {
        sgd_step(*net.front, front_grads, step);
        zero(front_grads);
      }
    }
    record.epoch_loss.push_back(loss_sum / static_cast<double>(samples.size()));
    if (!std::isfinite(record.epoch_loss.back())) {
      throw NumericalError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
    }
  }
  if (!all_finite(net.body) || (net.front && !all_finite(*net.front))) {
    throw NumericalError("training diverged: non-finite weights");
  }
  record.trained = true;
}

// Bottleneck activations of levels 1..count (count <= 2) for `rows` raw windows.
std::array<std::vector<float>, 2> bottlenecks(const HnnModel& model, std::span<const float> raw,
                                              std::size_t rows, int count) {
  std::array<std::vector<float>, 2> bn;
  Activations<float> front_acts;
  Activations<float> acts;
  std::vector<float> input;
  for (int l = 1; l <= count; ++l) {
    const LevelNet& net = model.levels[static_cast<std::size_t>(l - 1)].net;
    body_input(net, raw, l == 2 ? std::span<const float>(bn[0]) : std::span<const float>(), rows,
               front_acts, input);
    forward_rows(net.body, std::span<const float>(input), rows, acts,
                 static_cast<std::size_t>(net.bottleneck_layer) + 1);
    bn[static_cast<std::size_t>(l - 1)] = std::move(acts.back());
  }
  return bn;
}

// Level-3 extras from the two bottlenecks, per the topology's wiring.
void level3_extras(const HnnModel& model, const std::array<std::vector<float>, 2>& bn,
                   std::size_t rows, std::vector<float>& out) {
  if (model.topology.wiring == BnWiring::OneBn) {
    out = bn[1];
    return;
  }
  concat_rows(bn[0], bn[0].size() / rows, bn[1], bn[1].size() / rows, rows, out);
}

// Features wired into `level` (1-based), computed by the frozen lower levels.
void wired_features(const HnnModel& model, int level, std::span<const float> raw, std::size_t rows,
                    std::vector<float>& out) {
  out.clear();
  if (level == 1) return;
  auto bn = bottlenecks(model, raw, rows, level - 1);
  if (level == 2) {
    out = std::move(bn[0]);
  } else {
    level3_extras(model, bn, rows, out);
  }
}

void check_windows(std::span<const float> windows, std::size_t rows) {
  if (rows == 0 || windows.size() != rows * static_cast<std::size_t>(kWindowDim)) {
    throw ShapeError(0, "expected " + std::to_string(rows) + " windows of " +
                            std::to_string(kWindowDim) + " values");
  }
}

}  // namespace

std::string_view to_string(BnWiring wiring) {
  return wiring == BnWiring::AllBn ? "all_bn" : "one_bn";
}

BnWiring wiring_from_string(std::string_view name) {
  if (name == "all_bn" || name == "all" || name == "AllBn") return BnWiring::AllBn;
  if (name == "one_bn" || name == "one" || name == "OneBn") return BnWiring::OneBn;
  throw ConfigError("unknown bottleneck wiring '" + std::string(name) + "' (expected all|one)");
}

void validate(const HnnTopology& topology) {
  for (int l = 1; l <= 3; ++l) {
    const LevelSpec& spec = topology.levels[static_cast<std::size_t>(l - 1)];
    const std::string where = topology.name + " " + level_name(l);
    if (l < 3 && !spec.bn) throw ConfigError(where + " needs a bottleneck");
    if (l == 3 && spec.bn) throw ConfigError(where + " must not have a bottleneck");
    if (!spec.bn && !spec.bh.empty()) {
      throw ConfigError(where + ": hidden layers after the bottleneck need a bottleneck");
    }
    if (!spec.has_output) {
      throw ConfigError(where + ": every level needs an output layer for staged training");
    }
    const auto positive = [](int w) { return w >= 1; };
    if (!std::all_of(spec.ah.begin(), spec.ah.end(), positive) ||
        !std::all_of(spec.bh.begin(), spec.bh.end(), positive) || (spec.bn && *spec.bn < 1)) {
      throw ConfigError(where + ": layer widths must be >= 1");
    }
    if (spec.conv && spec.conv->pool_to < 1) throw ConfigError(where + ": pool_to must be >= 1");
  }
  if (topology.num_classes < 2) throw ConfigError(topology.name + ": need at least 2 classes");
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      if (topology.env_schedule[a] == topology.env_schedule[b]) {
        throw ConfigError(topology.name + ": env_schedule must use one environment per level");
      }
    }
  }
}

std::vector<int> wired_bottlenecks(const HnnTopology& topology, int level) {
  check_level(level);
  const auto& lv = topology.levels;
  if (level == 1) return {};
  if (level == 2) return {*lv[0].bn};
  if (topology.wiring == BnWiring::AllBn) return {*lv[0].bn, *lv[1].bn};
  return {*lv[1].bn};
}

HnnModel build_hnn(const HnnTopology& topology, std::uint64_t seed) {
  validate(topology);
  HnnModel model;
  model.topology = topology;
  model.seed = seed;
  for (int l = 1; l <= 3; ++l) {
    const auto wired = wired_bottlenecks(topology, l);
    const int extra = std::accumulate(wired.begin(), wired.end(), 0);
    auto& level = model.levels[static_cast<std::size_t>(l - 1)];
    try {
      level.net = make_level_net(topology.levels[static_cast<std::size_t>(l - 1)], extra,
                                 topology.num_classes, derive_seed(seed, static_cast<std::uint64_t>(l)));
    } catch (const Error& e) {
      throw ConfigError(topology.name + " " + level_name(l) + ": " + e.what());
    }
    level.log.envs = {topology.env_schedule[static_cast<std::size_t>(l - 1)]};
  }
  return model;
}

void train_level(HnnModel& model, int level, const Corpus& corpus, const TrainHyper& hyper) {
  check_level(level);
  for (int l = 1; l < level; ++l) {
    if (!model.levels[static_cast<std::size_t>(l - 1)].log.trained) {
      throw ConfigError(level_name(l) + " must be trained before " + level_name(level));
    }
  }
  for (int l = level + 1; l <= 3; ++l) {
    if (model.levels[static_cast<std::size_t>(l - 1)].log.trained) {
      throw ConfigError("cannot retrain " + level_name(level) + " after " + level_name(l) +
                        " was trained on its features");
    }
  }
  const Environment want = model.topology.env_schedule[static_cast<std::size_t>(level - 1)];
  for (const auto& utt : corpus.utterances) {
    if (utt.env != want) {
      throw ConfigError(level_name(level) + " trains on " + std::string(to_string(want)) +
                        " data, but utterance '" + utt.id + "' is " +
                        std::string(to_string(utt.env)));
    }
  }
  const HnnModel& frozen = model;
  ExtraFeatures extras;
  if (level > 1) {
    extras = [&frozen, level](std::span<const float> raw, std::size_t rows, std::vector<float>& out) {
      wired_features(frozen, level, raw, rows, out);
    };
  }
  auto& target = model.levels[static_cast<std::size_t>(level - 1)];
  TrainingRecord record = target.log;
  train_unit(target.net, std::span<const Corpus>(&corpus, 1), extras, hyper,
             static_cast<std::uint64_t>(level), record);
  target.log = std::move(record);
}

std::vector<float> extract_bottleneck(const HnnModel& model, int level,
                                      std::span<const float> window) {
  check_level(level);
  if (level == 3) throw ConfigError("level 3 has no bottleneck architecture");
  check_windows(window, 1);
  return std::move(bottlenecks(model, window, 1, level)[static_cast<std::size_t>(level - 1)]);
}

std::vector<LevelPosteriors> hnn_forward_rows(const HnnModel& model, std::span<const float> windows,
                                              std::size_t rows, OutputMode outputs) {
  check_windows(windows, rows);
  std::vector<LevelPosteriors> result(rows);
  std::array<std::vector<float>, 2> bn;
  Activations<float> front_acts;
  Activations<float> acts;
  std::vector<float> input;
  std::vector<float> extras;
  for (int l = 1; l <= 3; ++l) {
    const LevelNet& net = model.levels[static_cast<std::size_t>(l - 1)].net;
    extras.clear();
    if (l == 2) extras = bn[0];
    if (l == 3) level3_extras(model, bn, rows, extras);
    body_input(net, windows, extras, rows, front_acts, input);
    const bool full = l == 3 || outputs == OutputMode::AllLevels;
    const std::size_t count =
        full ? net.body.num_layers() : static_cast<std::size_t>(net.bottleneck_layer) + 1;
    forward_rows(net.body, std::span<const float>(input), rows, acts, count);
    if (l < 3) bn[static_cast<std::size_t>(l - 1)] = acts[static_cast<std::size_t>(net.bottleneck_layer)];
    if (full) {
      const std::size_t classes = net.body.output_shape().size();
      for (std::size_t r = 0; r < rows; ++r) {
        result[r][static_cast<std::size_t>(l - 1)] =
            to_posterior(std::span<const float>(acts.back()).subspan(r * classes, classes));
      }
    }
  }
  return result;
}

LevelPosteriors hnn_forward(const HnnModel& model, std::span<const float> window,
                            OutputMode outputs) {
  return hnn_forward_rows(model, window, 1, outputs).front();
}

std::uint64_t hnn_macs(const HnnModel& model, OutputMode outputs) {
  std::uint64_t total = 0;
  for (int l = 1; l <= 3; ++l) {
    const LevelNet& net = model.levels[static_cast<std::size_t>(l - 1)].net;
    const bool full = l == 3 || outputs == OutputMode::AllLevels;
    if (net.front) total += count_macs(*net.front);
    total += count_macs(net.body, 0,
                        full ? net.body.num_layers() : static_cast<std::size_t>(net.bottleneck_layer) + 1);
  }
  return total;
}

std::uint64_t hnn_params(const HnnModel& model, OutputMode outputs) {
  std::uint64_t total = 0;
  for (int l = 1; l <= 3; ++l) {
    const LevelNet& net = model.levels[static_cast<std::size_t>(l - 1)].net;
    const bool full = l == 3 || outputs == OutputMode::AllLevels;
    if (net.front) total += count_params(*net.front);
    total += count_params(net.body, 0,
                          full ? net.body.num_layers() : static_cast<std::size_t>(net.bottleneck_layer) + 1);
  }
  return total;
}

std::vector<PosteriorFrame> combine_posteriors(const LevelPosteriors& frames,
                                               CombinationStrategy strategy) {
  if (!frames[2]) throw ConfigError("level-3 posteriors are missing");
  if (strategy == CombinationStrategy::ThirdOnly) return {*frames[2]};
  if (!frames[0] || !frames[1]) {
    throw ConfigError(std::string(to_string(strategy)) +
                      " needs AllLevels inference; ThirdOnly output has no level-1/2 posteriors");
  }
  if (strategy == CombinationStrategy::AnyLevelWakes) return {*frames[0], *frames[1], *frames[2]};
  // Mean written as a + (b - a)/3 + (c - a)/3 so identical inputs reproduce exactly.
  PosteriorFrame mean = *frames[0];
  for (std::size_t c = 0; c < mean.size(); ++c) {
    mean[c] += ((*frames[1])[c] - (*frames[0])[c]) / 3.0 + ((*frames[2])[c] - (*frames[0])[c]) / 3.0;
  }
  return {mean};
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::DNN: return "DNN";
    case BaselineKind::CNN1: return "CNN1";
    case BaselineKind::CNN2: return "CNN2";
    case BaselineKind::CNN3: return "CNN3";
    case BaselineKind::CNN4: return "CNN4";
    case BaselineKind::CNN5: return "CNN5";
    case BaselineKind::MHNN: return "MHNN";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(std::string_view name) {
  if (name == "BASELINE") return BaselineKind::DNN;
  for (auto k : {BaselineKind::DNN, BaselineKind::CNN1, BaselineKind::CNN2, BaselineKind::CNN3,
                 BaselineKind::CNN4, BaselineKind::CNN5, BaselineKind::MHNN}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

KwsModel build_baseline(BaselineKind kind, std::uint64_t seed) {
  const std::string name = kind == BaselineKind::DNN ? "BASELINE" : std::string(to_string(kind));
  return build_model(default_catalog().find(name), std::nullopt, seed);
}

void train_baseline(BaselineModel& model, std::span<const Corpus> corpora,
                    const TrainHyper& hyper) {
  TrainingRecord record = model.log;
  record.envs.clear();
  for (const auto& corpus : corpora) {
    for (const auto& utt : corpus.utterances) {
      if (std::find(record.envs.begin(), record.envs.end(), utt.env) == record.envs.end()) {
        record.envs.push_back(utt.env);
      }
    }
  }
  std::sort(record.envs.begin(), record.envs.end());
  train_unit(model.net, corpora, {}, hyper, 0, record);
  model.log = std::move(record);
}

std::vector<PosteriorFrame> baseline_forward_rows(const BaselineModel& model,
                                                  std::span<const float> windows, std::size_t rows) {
  check_windows(windows, rows);
  Activations<float> front_acts;
  Activations<float> acts;
  std::vector<float> input;
  body_input(model.net, windows, {}, rows, front_acts, input);
  forward_rows(model.net.body, std::span<const float>(input), rows, acts, model.net.body.num_layers());
  const std::size_t classes = model.net.body.output_shape().size();
  std::vector<PosteriorFrame> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = to_posterior(std::span<const float>(acts.back()).subspan(r * classes, classes));
  }
  return out;
}

PosteriorFrame baseline_forward(const BaselineModel& model, std::span<const float> window) {
  return baseline_forward_rows(model, window, 1).front();
}

LevelNet make_dense_net(const std::vector<int>& hidden, int num_classes, std::uint64_t seed) {
  LevelSpec spec;
  spec.ah = hidden;
  return make_level_net(spec, 0, num_classes, seed);
}

LevelNet make_cnn_net(const KernelSpec& kernel, const std::vector<int>& hidden, int num_classes,
                      std::uint64_t seed) {
  LevelNet net;
  net.front = Network(kWindowShape, {LayerSpec::conv2d(kernel), LayerSpec::relu()});
  init_glorot(*net.front, derive_seed(seed, 1));
  LevelSpec spec;
  spec.ah = hidden;
  auto [layers, bottleneck] =
      dense_body(static_cast<int>(net.front->output_shape().size()), spec, num_classes);
  net.body = Network(Shape::flat(static_cast<int>(net.front->output_shape().size())), std::move(layers));
  init_glorot(net.body, derive_seed(seed, 2));
  net.bottleneck_layer = bottleneck;
  return net;
}

std::uint64_t level_macs(const LevelNet& net) {
  return (net.front ? count_macs(*net.front) : 0) + count_macs(net.body);
}

std::uint64_t level_params(const LevelNet& net) {
  return (net.front ? count_params(*net.front) : 0) + count_params(net.body);
}

}  // namespace hnnkws
