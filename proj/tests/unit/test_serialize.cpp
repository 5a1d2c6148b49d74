#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hnnkws/catalog.hpp"
#include "hnnkws/error.hpp"
#include "hnnkws/serialize.hpp"

using namespace hnnkws;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hnnkws_test_" + name);
}

}  // namespace

TEST_CASE("base64 known vectors") {
  auto bytes = [](std::string_view s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
  CHECK(base64_encode(bytes("")) == "");
  CHECK(base64_encode(bytes("f")) == "Zg==");
  CHECK(base64_encode(bytes("fo")) == "Zm8=");
  CHECK(base64_encode(bytes("foo")) == "Zm9v");
  CHECK(base64_encode(bytes("foobar")) == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYmE=") == bytes("fooba"));
  CHECK_THROWS_AS(base64_decode("Zm9"), FormatError);
  CHECK_THROWS_AS(base64_decode("Zm9*"), FormatError);
}

TEST_CASE("every catalog model round-trips bit-exactly") {
  for (const auto& entry : default_catalog().entries) {
    CAPTURE(entry.name);
    const KwsModel model = build_model(entry, BnWiring::OneBn, 17);
    const std::string text = dump_model(model);
    const KwsModel back = model_from_json(nlohmann::json::parse(text));
    CHECK(back == model);
    CHECK(dump_model(back) == text);
  }
}

TEST_CASE("model files carry format metadata and the run config") {
  const KwsModel model = build_model(default_catalog().find("HNN3"), std::nullopt, 2);
  const auto path = temp_path("model.json");
  save_model(model, path, nlohmann::json{{"seed", 2}});
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["format"] == "hnnkws-model");
  CHECK(j["version"] == 1);
  CHECK(j["kind"] == "hnn");
  CHECK(j["run_config"]["seed"] == 2);
  CHECK(load_model(path) == model);
  std::filesystem::remove(path);
}

TEST_CASE("malformed model files") {
  const auto path = temp_path("bad_model.json");
  CHECK_THROWS_AS(load_model(temp_path("missing_model.json")), IoError);
  {
    std::ofstream(path) << "{\"format\": \"hnnkws-model\", ";
  }
  CHECK_THROWS_AS(load_model(path), FormatError);
  {
    std::ofstream(path) << "{\"format\": \"something-else\", \"version\": 1}";
  }
  CHECK_THROWS_AS(load_model(path), ConfigError);
  std::filesystem::remove(path);

  auto j = model_to_json(build_model(default_catalog().find("DNN"), std::nullopt, 1));
  j["net"]["body"]["params"][0]["weights"] = "AAAA";
  CHECK_THROWS_AS(model_from_json(j), Error);
}
