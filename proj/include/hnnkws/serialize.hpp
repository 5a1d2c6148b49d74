#pragma once

// Model container: JSON document tagged {"format": "hnnkws-model", "version": 1}.
// Layer specs and shapes are plain JSON; each weight and bias array is the
// row-major little-endian float32 buffer, base64-encoded.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hnnkws/hnn.hpp"

namespace hnnkws {

inline constexpr int kModelFormatVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

nlohmann::json topology_to_json(const HnnTopology& topology);
HnnTopology topology_from_json(const nlohmann::json& j);

// `run_config` is echoed into the file when non-null.
nlohmann::json model_to_json(const KwsModel& model, const nlohmann::json& run_config = nullptr);
KwsModel model_from_json(const nlohmann::json& j);

std::string dump_model(const KwsModel& model, const nlohmann::json& run_config = nullptr);
void save_model(const KwsModel& model, const std::filesystem::path& path,
                const nlohmann::json& run_config = nullptr);
KwsModel load_model(const std::filesystem::path& path);

}  // namespace hnnkws
