#pragma once

// Synthetic multi-environment feature corpus. Every frame is a class
// prototype plus environment-specific additive noise:
//   quiet  white Gaussian noise
//   video  temporally and spectrally correlated (colored) noise
//   incar  slowly drifting offsets concentrated on the low filterbank bins,
//          on top of a weaker white component
// A corpus is a pure function of its CorpusConfig.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hnnkws/types.hpp"

namespace hnnkws {

struct SegmentRange {
  int min = 1;
  int max = 1;
  bool operator==(const SegmentRange&) const = default;
};

struct CorpusConfig {
  std::uint64_t seed = 42;
  // Training utterances per environment (quiet, video, incar).
  std::array<int, 3> train_positive{1253, 1253, 1253};
  std::array<int, 3> train_negative{747, 747, 747};
  // Test set: utterances across all environments until this duration is reached.
  double test_hours = 2.0;
  double test_positive_fraction = 0.3;
  // Noise scale per environment (quiet, video, incar).
  std::array<double, 3> noise{0.9, 1.1, 1.3};
  std::array<std::array<float, kFrameDim>, kNumClasses> prototypes = default_prototypes();
  SegmentRange lead_sil{10, 40};
  SegmentRange word{8, 18};
  SegmentRange gap{0, 4};  // silence between word states of a positive
  SegmentRange trail_sil{10, 40};

  // Counts split by the 520:310 positive:negative ratio.
  void set_utts_per_env(int count);

  static std::array<std::array<float, kFrameDim>, kNumClasses> default_prototypes();

  bool operator==(const CorpusConfig&) const = default;
};

void validate(const CorpusConfig& cfg);
nlohmann::json to_json(const CorpusConfig& cfg);
// Fields missing from `j` keep the values already in `cfg`.
void merge_json(CorpusConfig& cfg, const nlohmann::json& j);

struct Utterance {
  std::string id;
  Environment env = Environment::Quiet;
  bool is_positive = false;
  std::vector<Label> labels;
  std::vector<float> values;  // labels.size() x kFrameDim, row-major

  std::size_t num_frames() const noexcept { return labels.size(); }
  double duration_seconds() const noexcept {
    return static_cast<double>(labels.size()) * kFrameSeconds;
  }
  std::span<const float> frame(std::size_t t) const {
    return {values.data() + t * kFrameDim, static_cast<std::size_t>(kFrameDim)};
  }
  bool operator==(const Utterance&) const = default;
};

struct Corpus {
  std::string name;
  std::string header;  // JSON text: config echo, seed, tool version
  std::vector<Utterance> utterances;

  std::size_t total_frames() const;
  double total_hours() const;
  bool operator==(const Corpus&) const = default;
};

struct GeneratedCorpus {
  std::array<Corpus, 3> train;  // indexed by Environment
  Corpus test;
  std::vector<std::string> warnings;
};

GeneratedCorpus gen_corpus(const CorpusConfig& cfg);

// True when the label sequence contains runs w1+ s{0,max_gap} w2+ s{0,max_gap} w3+.
// A negative max_gap means unbounded silence between the runs.
bool contains_keyword(std::span<const Label> labels, int max_gap);

struct FeatureWindow {
  std::array<float, kWindowDim> values{};
  Label label = Label::Sil;
};

// Writes the 11-frame window centered on frame `center` into `out`
// (kWindowDim floats); frames beyond the edges replicate the edge frame.
void fill_window(const Utterance& utt, std::size_t center, std::span<float> out);

// One window per frame. Throws ConfigError on an empty utterance.
std::vector<FeatureWindow> window_stream(const Utterance& utt);

// Binary corpus container; see README for the layout.
std::vector<std::uint8_t> encode_corpus(const Corpus& corpus);
Corpus decode_corpus(std::span<const std::uint8_t> bytes);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus(const std::filesystem::path& path);

}  // namespace hnnkws
