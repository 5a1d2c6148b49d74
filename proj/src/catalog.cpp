#include "hnnkws/catalog.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hnnkws/error.hpp"

namespace hnnkws {

namespace detail {
extern const std::string_view kCatalogJson;
}

namespace {

KernelSpec parse_kernel(const nlohmann::json& j) {
  return {j.at("count").get<int>(), j.at("length").get<int>(), j.at("height").get<int>(),
          j.at("stride_length").get<int>(), j.at("stride_height").get<int>()};
}

LevelSpec parse_level(const nlohmann::json& j) {
  LevelSpec spec;
  spec.ah = j.value("ah", std::vector<int>{});
  if (j.contains("bn")) spec.bn = j["bn"].get<int>();
  spec.bh = j.value("bh", std::vector<int>{});
  spec.has_output = j.value("has_output", true);
  if (j.contains("conv")) {
    spec.conv = ConvFrontEnd{parse_kernel(j["conv"].at("kernel")), j["conv"].at("pool_to").get<int>()};
  }
  return spec;
}

}  // namespace

const CatalogEntry& Catalog::find(std::string_view name) const {
  const std::string_view key = name == "DNN" ? std::string_view("BASELINE") : name;
  for (const auto& e : entries) {
    if (e.name == key) return e;
  }
  throw ConfigError("topology '" + std::string(name) + "' is not in the catalog");
}

Catalog parse_catalog(std::string_view json_text) {
  Catalog catalog;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (j.value("format", std::string{}) != "hnnkws-catalog") {
      throw ConfigError("not a topology catalog (format tag missing)");
    }
    for (const auto& t : j.at("topologies")) {
      CatalogEntry e;
      e.name = t.at("name").get<std::string>();
      const auto kind = t.at("kind").get<std::string>();
      if (kind == "dnn") {
        e.kind = CatalogKind::Dnn;
        e.hidden = t.at("hidden").get<std::vector<int>>();
      } else if (kind == "cnn") {
        e.kind = CatalogKind::Cnn;
        e.kernel = parse_kernel(t.at("kernel"));
        e.hidden = t.at("hidden").get<std::vector<int>>();
      } else if (kind == "hnn") {
        e.kind = CatalogKind::Hnn;
        e.topology.name = e.name;
        const auto& levels = t.at("levels");
        if (levels.size() != 3) throw ConfigError(e.name + ": an HNN has exactly 3 levels");
        for (std::size_t l = 0; l < 3; ++l) e.topology.levels[l] = parse_level(levels[l]);
        if (t.contains("wiring")) e.topology.wiring = wiring_from_string(t["wiring"].get<std::string>());
        validate(e.topology);
      } else {
        throw ConfigError(e.name + ": unknown kind '" + kind + "'");
      }
      e.reported_macs = t.value("reported_macs", std::map<std::string, std::string>{});
      catalog.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  return catalog;
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

const Catalog& default_catalog() {
  static const Catalog catalog = parse_catalog(detail::kCatalogJson);
  return catalog;
}

KwsModel build_model(const CatalogEntry& entry, std::optional<BnWiring> wiring,
                     std::uint64_t seed) {
  switch (entry.kind) {
    case CatalogKind::Dnn:
    case CatalogKind::Cnn: {
      BaselineModel model;
      model.name = entry.name;
      model.seed = seed;
      model.net = entry.kind == CatalogKind::Dnn
                      ? make_dense_net(entry.hidden, kNumClasses, seed)
                      : make_cnn_net(entry.kernel, entry.hidden, kNumClasses, seed);
      return model;
    }
    case CatalogKind::Hnn: {
      HnnTopology topology = entry.topology;
      if (wiring) topology.wiring = *wiring;
      return build_hnn(topology, seed);
    }
  }
  throw ConfigError("unknown catalog kind");
}

std::string variant_key(BnWiring wiring, OutputMode outputs) {
  return std::string(wiring == BnWiring::AllBn ? "all_bn" : "one_bn") + "+" +
         (outputs == OutputMode::AllLevels ? "all_output" : "third_only");
}

}  // namespace hnnkws
