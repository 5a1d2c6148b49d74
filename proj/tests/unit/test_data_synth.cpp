#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "hnnkws/data_synth.hpp"
#include "hnnkws/error.hpp"

using namespace hnnkws;

namespace {

CorpusConfig small_config(std::uint64_t seed = 9) {
  CorpusConfig cfg;
  cfg.seed = seed;
  cfg.set_utts_per_env(60);
  cfg.test_hours = 0.05;
  return cfg;
}

std::string label_string(const Utterance& u) {
  std::string s;
  for (Label l : u.labels) s += "s123"[static_cast<int>(l)];
  return s;
}

// Keyword anywhere in the string, any amount of silence between its words.
const std::regex kKeyword("1+s*2+s*3+");

double noise_energy(const Corpus& corpus, const CorpusConfig& cfg) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const auto& u : corpus.utterances) {
    for (std::size_t t = 0; t < u.num_frames(); ++t) {
      const auto& proto = cfg.prototypes[static_cast<std::size_t>(u.labels[t])];
      const auto f = u.frame(t);
      for (int d = 0; d < kFrameDim; ++d) {
        const double n = f[d] - proto[d];
        sum += n * n;
      }
      ++frames;
    }
  }
  return sum / static_cast<double>(frames);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hnnkws_test_" + name);
}

}  // namespace

TEST_CASE("default sizes follow the 520:310 split") {
  CorpusConfig cfg;
  cfg.set_utts_per_env(2000);
  CHECK(cfg.train_positive == std::array<int, 3>{1253, 1253, 1253});
  CHECK(cfg.train_negative == std::array<int, 3>{747, 747, 747});
  CHECK(CorpusConfig{} == cfg);
}

TEST_CASE("counts, environments and labels of a generated corpus") {
  const CorpusConfig cfg = small_config();
  const GeneratedCorpus g = gen_corpus(cfg);
  for (Environment env : kEnvironments) {
    const Corpus& c = g.train[static_cast<std::size_t>(env)];
    int positives = 0;
    for (const auto& u : c.utterances) {
      CHECK(u.env == env);
      CHECK(u.values.size() == u.num_frames() * kFrameDim);
      positives += u.is_positive;
      const std::string labels = label_string(u);
      CHECK_MESSAGE(std::regex_search(labels, kKeyword) == u.is_positive, u.id << " " << labels);
    }
    CHECK(positives == cfg.train_positive[static_cast<std::size_t>(env)]);
    CHECK(c.utterances.size() == 60u);
  }
  for (const auto& u : g.test.utterances) {
    CHECK(std::regex_search(label_string(u), kKeyword) == u.is_positive);
  }
}

TEST_CASE("train and test ids are disjoint and unique") {
  const GeneratedCorpus g = gen_corpus(small_config());
  std::set<std::string> ids;
  std::size_t count = 0;
  for (const auto& c : g.train) {
    for (const auto& u : c.utterances) ids.insert(u.id), ++count;
  }
  for (const auto& u : g.test.utterances) ids.insert(u.id), ++count;
  CHECK(ids.size() == count);
}

TEST_CASE("generation is a pure function of the config") {
  const GeneratedCorpus a = gen_corpus(small_config(5));
  const GeneratedCorpus b = gen_corpus(small_config(5));
  const GeneratedCorpus c = gen_corpus(small_config(6));
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK_FALSE(a.train[0] == c.train[0]);
}

TEST_CASE("environment separation of noise energy") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CorpusConfig cfg = small_config(seed);
    const GeneratedCorpus g = gen_corpus(cfg);
    const double quiet = noise_energy(g.train[0], cfg);
    CHECK(quiet < noise_energy(g.train[1], cfg));
    CHECK(quiet < noise_energy(g.train[2], cfg));
  }
}

TEST_CASE("noise models have their configured scale") {
  CorpusConfig cfg = small_config();
  cfg.noise = {0.5, 0.5, 0.5};
  const GeneratedCorpus g = gen_corpus(cfg);
  // Per-frame energy of unit-variance noise over 40 bins is 40 sigma^2.
  CHECK(noise_energy(g.train[0], cfg) == doctest::Approx(40 * 0.25).epsilon(0.05));
  CHECK(noise_energy(g.train[1], cfg) == doctest::Approx(40 * 0.25).epsilon(0.15));
  // Zero noise reproduces the prototypes exactly.
  cfg.noise = {0, 0, 0};
  const GeneratedCorpus clean = gen_corpus(cfg);
  CHECK(noise_energy(clean.train[2], cfg) == 0.0);
}

TEST_CASE("test-set duration bookkeeping") {
  const CorpusConfig cfg = small_config();
  const GeneratedCorpus g = gen_corpus(cfg);
  double seconds = 0.0;
  for (const auto& u : g.test.utterances) seconds += u.duration_seconds();
  CHECK(seconds == doctest::Approx(static_cast<double>(g.test.total_frames()) * 0.010));
  CHECK(g.test.total_hours() >= cfg.test_hours);
  CHECK(g.test.total_hours() < cfg.test_hours + 0.001);
}

TEST_CASE("keyword predicate with bounded gaps") {
  auto labels = [](std::string_view s) {
    std::vector<Label> out;
    for (char c : s) out.push_back(static_cast<Label>(c - '0'));
    return out;
  };
  CHECK(contains_keyword(labels("0112233"), 0));
  CHECK(contains_keyword(labels("1002003"), 2));
  CHECK_FALSE(contains_keyword(labels("1002003"), 1));
  CHECK(contains_keyword(labels("1000000200000003"), -1));
  CHECK_FALSE(contains_keyword(labels("1323"), -1));
  CHECK_FALSE(contains_keyword(labels("2130"), -1));
}

TEST_CASE("context windows replicate edge frames") {
  Utterance u;
  u.id = "u";
  u.labels.assign(3, Label::Sil);
  u.values.resize(3 * kFrameDim);
  for (int t = 0; t < 3; ++t) {
    std::fill_n(u.values.begin() + t * kFrameDim, kFrameDim, static_cast<float>(t));
  }
  std::vector<float> w(kWindowDim);
  fill_window(u, 0, w);
  for (int k = 0; k < kWindowFrames; ++k) {
    const float want = static_cast<float>(std::clamp(k - kContext, 0, 2));
    CHECK(w[static_cast<std::size_t>(k * kFrameDim)] == want);
  }
  CHECK(window_stream(u).size() == 3u);
  CHECK_THROWS_AS(window_stream(Utterance{}), ConfigError);
}

TEST_CASE("corpus container round trip") {
  const GeneratedCorpus g = gen_corpus(small_config());
  const auto path = temp_path("roundtrip.corpus");
  write_corpus(g.train[1], path);
  CHECK(read_corpus(path) == g.train[1]);
  std::filesystem::remove(path);

  Corpus empty;
  empty.name = "empty";
  CHECK(decode_corpus(encode_corpus(empty)) == empty);
}

TEST_CASE("truncated or foreign corpus bytes give a structured error") {
  const GeneratedCorpus g = gen_corpus(small_config());
  const auto bytes = encode_corpus(g.test);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
    CAPTURE(cut);
    try {
      decode_corpus(std::span(bytes.data(), cut));
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() <= cut);
    }
  }
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_corpus(bad), FormatError);
  CHECK_THROWS_AS(read_corpus(temp_path("missing.corpus")), IoError);
}

TEST_CASE("invalid corpus configs are rejected") {
  CorpusConfig cfg;
  cfg.noise[1] = -1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = CorpusConfig{};
  cfg.word = {0, 3};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = CorpusConfig{};
  cfg.test_positive_fraction = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_AS(CorpusConfig{}.set_utts_per_env(-1), ConfigError);
}

TEST_CASE("corpus config json round trip") {
  CorpusConfig cfg = small_config(77);
  cfg.noise = {0.1, 0.2, 0.3};
  CorpusConfig back;
  merge_json(back, to_json(cfg));
  CHECK(back == cfg);
  cfg.prototypes[1][0] = 3.0f;
  merge_json(back, to_json(cfg));
  CHECK(back == cfg);
}
