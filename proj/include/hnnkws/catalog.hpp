#pragma once

// Topology catalog: the layer tables for the baseline DNN, the HNN variants,
// the CNN baselines and the MHNN, plus the complexity figures reported for
// them. Shipped as data/topologies.json and compiled into the library.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hnnkws/hnn.hpp"

namespace hnnkws {

enum class CatalogKind { Dnn, Cnn, Hnn };

struct CatalogEntry {
  std::string name;
  CatalogKind kind = CatalogKind::Dnn;
  std::vector<int> hidden;  // Dnn / Cnn affine widths
  KernelSpec kernel{};      // Cnn
  HnnTopology topology{};   // Hnn
  // Reported MAC figure keyed by variant ("" for single networks,
  // "all_bn+all_output", "one_bn+third_only", ...).
  std::map<std::string, std::string> reported_macs;
};

struct Catalog {
  std::vector<CatalogEntry> entries;

  // Accepts "DNN" as an alias of "BASELINE". Throws ConfigError when absent.
  const CatalogEntry& find(std::string_view name) const;
};

Catalog parse_catalog(std::string_view json_text);
Catalog load_catalog(const std::filesystem::path& path);
const Catalog& default_catalog();

// Untrained model for a catalog entry; `wiring` overrides an HNN's default AllBn.
KwsModel build_model(const CatalogEntry& entry, std::optional<BnWiring> wiring,
                     std::uint64_t seed);

std::string variant_key(BnWiring wiring, OutputMode outputs);

}  // namespace hnnkws
