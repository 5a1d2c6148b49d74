#include "hnnkws/serialize.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <sstream>

#include "hnnkws/error.hpp"

namespace hnnkws {

namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string encode_floats(const std::vector<float>& values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 4);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_floats(const std::string& text, std::size_t expected, const char* what) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * 4) {
    throw ConfigError(std::string("model ") + what + ": expected " + std::to_string(expected) +
                      " values, found " + std::to_string(bytes.size() / 4));
  }
  std::vector<float> values(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[4 * k + i]) << (8 * i);
    values[k] = std::bit_cast<float>(bits);
  }
  return values;
}

nlohmann::json layer_to_json(const LayerSpec& layer) {
  nlohmann::json j{{"kind", to_string(layer.kind)}};
  switch (layer.kind) {
    case LayerKind::Affine:
      j["in"] = layer.in_dim;
      j["out"] = layer.out_dim;
      break;
    case LayerKind::Conv2d:
      j["kernel"] = {{"count", layer.kernel.count},
                     {"length", layer.kernel.length},
                     {"height", layer.kernel.height},
                     {"stride_length", layer.kernel.stride_length},
                     {"stride_height", layer.kernel.stride_height}};
      break;
    case LayerKind::MaxPool:
      j["pool"] = {layer.pool.length, layer.pool.height};
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec layer;
  layer.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  if (layer.kind == LayerKind::Affine) {
    layer.in_dim = j.at("in").get<int>();
    layer.out_dim = j.at("out").get<int>();
  } else if (layer.kind == LayerKind::Conv2d) {
    const auto& k = j.at("kernel");
    layer.kernel = {k.at("count").get<int>(), k.at("length").get<int>(), k.at("height").get<int>(),
                    k.at("stride_length").get<int>(), k.at("stride_height").get<int>()};
  } else if (layer.kind == LayerKind::MaxPool) {
    layer.pool = {j.at("pool").at(0).get<int>(), j.at("pool").at(1).get<int>()};
  }
  return layer;
}

nlohmann::json level_to_json(const LevelNet& net) {
  nlohmann::json j;
  j["front"] = net.front ? network_to_json(*net.front) : nlohmann::json(nullptr);
  j["body"] = network_to_json(net.body);
  j["bottleneck_layer"] = net.bottleneck_layer;
  j["extra_dim"] = net.extra_dim;
  j["metadata"] = net.metadata;
  return j;
}

LevelNet level_from_json(const nlohmann::json& j) {
  LevelNet net;
  if (!j.at("front").is_null()) net.front = network_from_json(j["front"]);
  net.body = network_from_json(j.at("body"));
  net.bottleneck_layer = j.at("bottleneck_layer").get<int>();
  net.extra_dim = j.at("extra_dim").get<int>();
  net.metadata = j.value("metadata", std::map<std::string, std::string>{});
  if (net.bottleneck_layer >= static_cast<int>(net.body.num_layers())) {
    throw ConfigError("model: bottleneck layer index out of range");
  }
  return net;
}

nlohmann::json record_to_json(const TrainingRecord& r) {
  nlohmann::json envs = nlohmann::json::array();
  for (Environment e : r.envs) envs.push_back(to_string(e));
  return {{"envs", envs},        {"trained", r.trained}, {"epoch_loss", r.epoch_loss},
          {"samples_per_epoch", r.samples_per_epoch}, {"lr", r.lr}, {"batch", r.batch},
          {"seed", r.seed}};
}

TrainingRecord record_from_json(const nlohmann::json& j) {
  TrainingRecord r;
  for (const auto& e : j.at("envs")) r.envs.push_back(environment_from_string(e.get<std::string>()));
  r.trained = j.at("trained").get<bool>();
  r.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
  r.samples_per_epoch = j.at("samples_per_epoch").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.batch = j.at("batch").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

nlohmann::json kernel_to_json(const KernelSpec& k) {
  return {{"count", k.count}, {"length", k.length}, {"height", k.height},
          {"stride_length", k.stride_length}, {"stride_height", k.stride_height}};
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out.push_back(kAlphabet[(v >> s) & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t k = 0; k < kAlphabet.size(); ++k) {
    lookup[static_cast<unsigned char>(kAlphabet[k])] = static_cast<int>(k);
  }
  if (text.size() % 4 != 0) throw FormatError(text.size(), "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = lookup[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw FormatError(i + k, "invalid base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    layers.push_back(layer_to_json(net.layers()[i]));
    params.push_back({{"weights", encode_floats(net.params(i).weights)},
                      {"biases", encode_floats(net.params(i).biases)}});
  }
  const Shape& in = net.input_shape();
  return {{"input_shape", {in.channels, in.length, in.height}}, {"layers", layers}, {"params", params}};
}

Network network_from_json(const nlohmann::json& j) {
  const Shape in{j.at("input_shape").at(0).get<int>(), j.at("input_shape").at(1).get<int>(),
                 j.at("input_shape").at(2).get<int>()};
  std::vector<LayerSpec> layers;
  for (const auto& l : j.at("layers")) layers.push_back(layer_from_json(l));
  Network net(in, std::move(layers));
  const auto& params = j.at("params");
  if (params.size() != net.num_layers()) throw ConfigError("model: parameter/layer count mismatch");
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    auto& p = net.params(i);
    p.weights = decode_floats(params[i].at("weights").get<std::string>(), p.weights.size(), "weights");
    p.biases = decode_floats(params[i].at("biases").get<std::string>(), p.biases.size(), "biases");
  }
  return net;
}

nlohmann::json topology_to_json(const HnnTopology& topology) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& spec : topology.levels) {
    nlohmann::json l{{"ah", spec.ah}, {"bh", spec.bh}, {"has_output", spec.has_output}};
    if (spec.bn) l["bn"] = *spec.bn;
    if (spec.conv) l["conv"] = {{"kernel", kernel_to_json(spec.conv->kernel)}, {"pool_to", spec.conv->pool_to}};
    levels.push_back(l);
  }
  nlohmann::json envs = nlohmann::json::array();
  for (Environment e : topology.env_schedule) envs.push_back(to_string(e));
  return {{"name", topology.name},
          {"levels", levels},
          {"wiring", to_string(topology.wiring)},
          {"env_schedule", envs},
          {"num_classes", topology.num_classes}};
}

HnnTopology topology_from_json(const nlohmann::json& j) {
  HnnTopology t;
  t.name = j.at("name").get<std::string>();
  const auto& levels = j.at("levels");
  if (levels.size() != 3) throw ConfigError("topology needs exactly 3 levels");
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& lj = levels[l];
    LevelSpec& spec = t.levels[l];
    spec.ah = lj.value("ah", std::vector<int>{});
    spec.bh = lj.value("bh", std::vector<int>{});
    spec.has_output = lj.value("has_output", true);
    if (lj.contains("bn")) spec.bn = lj["bn"].get<int>();
    if (lj.contains("conv")) {
      const auto& k = lj["conv"].at("kernel");
      spec.conv = ConvFrontEnd{{k.at("count").get<int>(), k.at("length").get<int>(),
                                k.at("height").get<int>(), k.at("stride_length").get<int>(),
                                k.at("stride_height").get<int>()},
                               lj["conv"].at("pool_to").get<int>()};
    }
  }
  // Wiring, schedule and class count may be omitted and keep their defaults.
  if (j.contains("wiring")) t.wiring = wiring_from_string(j["wiring"].get<std::string>());
  if (j.contains("env_schedule")) {
    const auto& sched = j["env_schedule"];
    if (sched.size() != 3) throw ConfigError("env_schedule needs exactly 3 environments");
    for (std::size_t l = 0; l < 3; ++l) {
      t.env_schedule[l] = environment_from_string(sched[l].get<std::string>());
    }
  }
  t.num_classes = j.value("num_classes", kNumClasses);
  validate(t);
  return t;
}

nlohmann::json model_to_json(const KwsModel& model, const nlohmann::json& run_config) {
  nlohmann::json j{{"format", "hnnkws-model"},
                   {"version", kModelFormatVersion},
                   {"tool_version", HNNKWS_VERSION}};
  if (!run_config.is_null()) j["run_config"] = run_config;
  if (const auto* hnn = std::get_if<HnnModel>(&model)) {
    j["kind"] = "hnn";
    j["seed"] = hnn->seed;
    j["topology"] = topology_to_json(hnn->topology);
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& level : hnn->levels) {
      levels.push_back({{"net", level_to_json(level.net)}, {"training", record_to_json(level.log)}});
    }
    j["levels"] = levels;
  } else {
    const auto& base = std::get<BaselineModel>(model);
    j["kind"] = "baseline";
    j["name"] = base.name;
    j["seed"] = base.seed;
    j["net"] = level_to_json(base.net);
    j["training"] = record_to_json(base.log);
  }
  return j;
}

KwsModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != "hnnkws-model") {
      throw ConfigError("not a model file (format tag missing)");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw ConfigError("unsupported model format version");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "hnn") {
      HnnModel model;
      model.topology = topology_from_json(j.at("topology"));
      model.seed = j.at("seed").get<std::uint64_t>();
      const auto& levels = j.at("levels");
      if (levels.size() != 3) throw ConfigError("model: expected 3 levels");
      for (std::size_t l = 0; l < 3; ++l) {
        model.levels[l].net = level_from_json(levels[l].at("net"));
        model.levels[l].log = record_from_json(levels[l].at("training"));
      }
      return model;
    }
    if (kind == "baseline") {
      BaselineModel model;
      model.name = j.at("name").get<std::string>();
      model.seed = j.at("seed").get<std::uint64_t>();
      model.net = level_from_json(j.at("net"));
      model.log = record_from_json(j.at("training"));
      return model;
    }
    throw ConfigError("model: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

std::string dump_model(const KwsModel& model, const nlohmann::json& run_config) {
  return model_to_json(model, run_config).dump(1);
}

void save_model(const KwsModel& model, const std::filesystem::path& path,
                const nlohmann::json& run_config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << dump_model(model, run_config) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

KwsModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(e.byte, std::string("model is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace hnnkws
