#include "hnnkws/data_synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "hnnkws/error.hpp"
#include "hnnkws/rng.hpp"

namespace hnnkws {

namespace {

constexpr char kMagic[8] = {'H', 'K', 'W', 'S', 'C', 'O', 'R', 'P'};
constexpr std::uint32_t kCorpusVersion = 1;

constexpr double kVideoTimeCorrelation = 0.5;
constexpr double kIncarDrift = 0.95;
constexpr double kIncarWhiteShare = 0.3;
constexpr double kIncarLowBinScale = 10.0;

void append_label_run(std::vector<Label>& labels, Label label, int count) {
  labels.insert(labels.end(), static_cast<std::size_t>(std::max(count, 0)), label);
}

std::vector<Label> positive_labels(const CorpusConfig& cfg, Rng& rng) {
  std::vector<Label> labels;
  append_label_run(labels, Label::Sil, rng.range(cfg.lead_sil.min, cfg.lead_sil.max));
  append_label_run(labels, Label::W1, rng.range(cfg.word.min, cfg.word.max));
  append_label_run(labels, Label::Sil, rng.range(cfg.gap.min, cfg.gap.max));
  append_label_run(labels, Label::W2, rng.range(cfg.word.min, cfg.word.max));
  append_label_run(labels, Label::Sil, rng.range(cfg.gap.min, cfg.gap.max));
  append_label_run(labels, Label::W3, rng.range(cfg.word.min, cfg.word.max));
  append_label_run(labels, Label::Sil, rng.range(cfg.trail_sil.min, cfg.trail_sil.max));
  return labels;
}

// Negatives are silence plus 0-3 word segments in any order that does not
// form the keyword. Near misses (w1 w2 or w2 w3) are drawn on purpose.
std::vector<Label> negative_labels(const CorpusConfig& cfg, Rng& rng) {
  for (;;) {
    std::vector<Label> tokens;
    const double pick = rng.uniform();
    if (pick < 0.2) {
      tokens = {Label::W1, Label::W2};
    } else if (pick < 0.4) {
      tokens = {Label::W2, Label::W3};
    } else {
      const int count = rng.range(0, 3);
      for (int i = 0; i < count; ++i) tokens.push_back(static_cast<Label>(rng.range(1, 3)));
    }
    std::vector<Label> labels;
    append_label_run(labels, Label::Sil, rng.range(cfg.lead_sil.min, cfg.lead_sil.max));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) append_label_run(labels, Label::Sil, rng.range(cfg.gap.min, cfg.gap.max));
      append_label_run(labels, tokens[i], rng.range(cfg.word.min, cfg.word.max));
    }
    append_label_run(labels, Label::Sil, rng.range(cfg.trail_sil.min, cfg.trail_sil.max));
    if (!contains_keyword(labels, -1)) return labels;
  }
}

void add_noise(Environment env, double sigma, std::span<float> values, std::size_t frames,
               Rng& rng) {
  const auto dim = static_cast<std::size_t>(kFrameDim);
  switch (env) {
    case Environment::Quiet:
      for (auto& v : values) v += static_cast<float>(sigma * rng.normal());
      break;
    case Environment::Video: {
      // AR(1) in time over spectrally smoothed white noise; stationary variance sigma^2.
      const double rho = kVideoTimeCorrelation;
      const double innovation = std::sqrt(1.0 - rho * rho);
      std::vector<double> state(dim, 0.0);
      std::vector<double> white(dim);
      for (std::size_t t = 0; t < frames; ++t) {
        for (auto& w : white) w = rng.normal();
        for (std::size_t d = 0; d < dim; ++d) {
          const double left = white[d == 0 ? 0 : d - 1];
          const double right = white[d + 1 == dim ? d : d + 1];
          const double colored = (left + 2.0 * white[d] + right) / std::sqrt(6.0);
          state[d] = t == 0 ? colored : rho * state[d] + innovation * colored;
          values[t * dim + d] += static_cast<float>(sigma * state[d]);
        }
      }
      break;
    }
    case Environment::Incar: {
      // Per-utterance offset plus slow drift, weighted toward low bins, plus white noise.
      // The spectral profile is normalized so expected frame energy is dim * sigma^2.
      std::vector<double> profile(dim);
      double mean_sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        profile[d] = std::exp(-static_cast<double>(d) / kIncarLowBinScale);
        mean_sq += profile[d] * profile[d];
      }
      mean_sq /= static_cast<double>(dim);
      for (auto& p : profile) p /= std::sqrt(mean_sq);
      const double rho = kIncarDrift;
      const double innovation = std::sqrt(1.0 - rho * rho);
      const double white_scale = std::sqrt(kIncarWhiteShare);
      const double offset_scale = std::sqrt(1.0 - kIncarWhiteShare);
      std::vector<double> offset(dim);
      std::vector<double> drift(dim);
      for (auto& o : offset) o = rng.normal();
      for (auto& d : drift) d = rng.normal();
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t d = 0; d < dim; ++d) {
          if (t > 0) drift[d] = rho * drift[d] + innovation * rng.normal();
          const double low = 0.6 * offset[d] + 0.8 * drift[d];
          const double n = white_scale * rng.normal() + offset_scale * profile[d] * low;
          values[t * dim + d] += static_cast<float>(sigma * n);
        }
      }
      break;
    }
  }
}

Utterance make_utterance(const CorpusConfig& cfg, std::string id, Environment env, bool positive,
                         Rng& rng) {
  Utterance utt;
  utt.id = std::move(id);
  utt.env = env;
  utt.is_positive = positive;
  utt.labels = positive ? positive_labels(cfg, rng) : negative_labels(cfg, rng);
  utt.values.resize(utt.labels.size() * kFrameDim);
  for (std::size_t t = 0; t < utt.labels.size(); ++t) {
    const auto& proto = cfg.prototypes[static_cast<std::size_t>(utt.labels[t])];
    std::copy(proto.begin(), proto.end(), utt.values.begin() + static_cast<std::ptrdiff_t>(t * kFrameDim));
  }
  const double sigma = cfg.noise[static_cast<std::size_t>(env)];
  if (sigma > 0.0) add_noise(env, sigma, utt.values, utt.labels.size(), rng);
  return utt;
}

std::string make_id(std::string_view prefix, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(prefix) + "-" + digits;
}

std::string corpus_header(const CorpusConfig& cfg, std::string_view name) {
  nlohmann::json header;
  header["corpus"] = name;
  header["seed"] = cfg.seed;
  header["config"] = to_json(cfg);
  header["tool_version"] = HNNKWS_VERSION;
  return header.dump();
}

char label_char(Label label) {
  switch (label) {
    case Label::Sil: return 's';
    case Label::W1: return '1';
    case Label::W2: return '2';
    case Label::W3: return '3';
  }
  return '?';
}

// Little-endian byte writer / bounds-checked reader.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(get(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError(pos_, std::string("truncated corpus while reading ") + what);
    }
  }
  std::uint64_t get(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

void CorpusConfig::set_utts_per_env(int count) {
  if (count < 0) throw ConfigError("utterances per environment must be >= 0");
  const auto positives = static_cast<int>(std::lround(count * 520.0 / 830.0));
  train_positive.fill(positives);
  train_negative.fill(count - positives);
}

std::array<std::array<float, kFrameDim>, kNumClasses> CorpusConfig::default_prototypes() {
  // Silence is flat; each word state has a main spectral bump and a weaker one.
  struct Bump {
    double center;
    double amplitude;
  };
  const std::array<std::array<Bump, 2>, kNumClasses> bumps = {{
      {{{0.0, 0.0}, {0.0, 0.0}}},
      {{{8.0, 1.0}, {27.0, 0.5}}},
      {{{19.0, 1.0}, {33.0, 0.5}}},
      {{{29.0, 1.0}, {11.0, 0.5}}},
  }};
  constexpr double kWidth = 3.5;
  std::array<std::array<float, kFrameDim>, kNumClasses> protos{};
  for (int c = 0; c < kNumClasses; ++c) {
    for (int d = 0; d < kFrameDim; ++d) {
      double v = 0.0;
      for (const Bump& b : bumps[static_cast<std::size_t>(c)]) {
        const double z = (d - b.center) / kWidth;
        v += b.amplitude * std::exp(-0.5 * z * z);
      }
      protos[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] = static_cast<float>(v);
    }
  }
  return protos;
}

void validate(const CorpusConfig& cfg) {
  for (std::size_t e = 0; e < 3; ++e) {
    if (cfg.train_positive[e] < 0 || cfg.train_negative[e] < 0) {
      throw ConfigError("utterance counts must be >= 0");
    }
    if (!(cfg.noise[e] >= 0.0) || !std::isfinite(cfg.noise[e])) {
      throw ConfigError("noise levels must be finite and >= 0");
    }
  }
  if (!(cfg.test_hours >= 0.0) || !std::isfinite(cfg.test_hours)) {
    throw ConfigError("test_hours must be >= 0");
  }
  if (!(cfg.test_positive_fraction >= 0.0 && cfg.test_positive_fraction <= 1.0)) {
    throw ConfigError("test_positive_fraction must be in [0, 1]");
  }
  for (const auto* r : {&cfg.lead_sil, &cfg.gap, &cfg.trail_sil}) {
    if (r->min < 0 || r->max < r->min) throw ConfigError("invalid segment length range");
  }
  if (cfg.word.min < 1 || cfg.word.max < cfg.word.min) {
    throw ConfigError("word segments need at least one frame");
  }
  if (cfg.lead_sil.max + cfg.trail_sil.max < 1) {
    throw ConfigError("utterances need at least one silence frame");
  }
  for (const auto& proto : cfg.prototypes) {
    for (float v : proto) {
      if (!std::isfinite(v)) throw ConfigError("prototype values must be finite");
    }
  }
}

nlohmann::json to_json(const CorpusConfig& cfg) {
  auto range = [](const SegmentRange& r) { return nlohmann::json::array({r.min, r.max}); };
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["train_positive"] = cfg.train_positive;
  j["train_negative"] = cfg.train_negative;
  j["test_hours"] = cfg.test_hours;
  j["test_positive_fraction"] = cfg.test_positive_fraction;
  j["noise"] = {{"quiet", cfg.noise[0]}, {"video", cfg.noise[1]}, {"incar", cfg.noise[2]}};
  // The built-in prototypes are echoed by name to keep config echoes short.
  if (cfg.prototypes == CorpusConfig::default_prototypes()) {
    j["prototypes"] = "default";
  } else {
    j["prototypes"] = cfg.prototypes;
  }
  j["lead_sil"] = range(cfg.lead_sil);
  j["word"] = range(cfg.word);
  j["gap"] = range(cfg.gap);
  j["trail_sil"] = range(cfg.trail_sil);
  return j;
}

void merge_json(CorpusConfig& cfg, const nlohmann::json& j) {
  static const std::set<std::string> known{
      "seed",  "utts_per_env", "train_positive", "train_negative", "test_hours",
      "test_positive_fraction", "noise", "prototypes", "lead_sil", "word", "gap", "trail_sil"};
  if (!j.is_object()) throw ConfigError("corpus config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown corpus key '" + key + "'");
  }
  try {
    auto range = [&](const char* key, SegmentRange& r) {
      if (j.contains(key)) r = {j[key].at(0).get<int>(), j[key].at(1).get<int>()};
    };
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("utts_per_env")) cfg.set_utts_per_env(j["utts_per_env"].get<int>());
    if (j.contains("train_positive")) cfg.train_positive = j["train_positive"].get<std::array<int, 3>>();
    if (j.contains("train_negative")) cfg.train_negative = j["train_negative"].get<std::array<int, 3>>();
    if (j.contains("test_hours")) cfg.test_hours = j["test_hours"].get<double>();
    if (j.contains("test_positive_fraction")) {
      cfg.test_positive_fraction = j["test_positive_fraction"].get<double>();
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      for (const auto& [key, value] : n.items()) {
        if (key != "quiet" && key != "video" && key != "incar") {
          throw ConfigError("unknown noise environment '" + key + "'");
        }
      }
      for (Environment env : kEnvironments) {
        const std::string key(to_string(env));
        if (n.contains(key)) cfg.noise[static_cast<std::size_t>(env)] = n[key].get<double>();
      }
    }
    if (j.contains("prototypes") && j["prototypes"] == "default") {
      cfg.prototypes = CorpusConfig::default_prototypes();
    } else if (j.contains("prototypes")) {
      cfg.prototypes = j["prototypes"].get<std::array<std::array<float, kFrameDim>, kNumClasses>>();
    }
    range("lead_sil", cfg.lead_sil);
    range("word", cfg.word);
    range("gap", cfg.gap);
    range("trail_sil", cfg.trail_sil);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("corpus config: ") + e.what());
  }
}

std::size_t Corpus::total_frames() const {
  std::size_t frames = 0;
  for (const auto& utt : utterances) frames += utt.num_frames();
  return frames;
}

double Corpus::total_hours() const {
  return static_cast<double>(total_frames()) * kFrameSeconds / 3600.0;
}

GeneratedCorpus gen_corpus(const CorpusConfig& cfg) {
  validate(cfg);
  GeneratedCorpus out;

  double min_distance = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumClasses; ++a) {
    for (int b = a + 1; b < kNumClasses; ++b) {
      double sq = 0.0;
      for (int d = 0; d < kFrameDim; ++d) {
        const double diff = cfg.prototypes[a][d] - cfg.prototypes[b][d];
        sq += diff * diff;
      }
      min_distance = std::min(min_distance, std::sqrt(sq));
    }
  }
  const double noise_floor = *std::max_element(cfg.noise.begin(), cfg.noise.end());
  if (min_distance < noise_floor) {
    out.warnings.push_back("closest class prototypes are " + std::to_string(min_distance) +
                           " apart, below the noise level " + std::to_string(noise_floor) +
                           "; the corpus may be unlearnable");
  }

  for (Environment env : kEnvironments) {
    const auto e = static_cast<std::size_t>(env);
    Rng rng(derive_seed(cfg.seed, e));
    Corpus& corpus = out.train[e];
    corpus.name = std::string(to_string(env));
    corpus.header = corpus_header(cfg, corpus.name);
    const int total = cfg.train_positive[e] + cfg.train_negative[e];
    corpus.utterances.reserve(static_cast<std::size_t>(total));
    // Positives and negatives are interleaved in proportion.
    int pos_left = cfg.train_positive[e];
    int neg_left = cfg.train_negative[e];
    for (int i = 0; i < total; ++i) {
      const bool positive =
          neg_left == 0 ||
          (pos_left > 0 && rng.below(static_cast<std::uint64_t>(pos_left + neg_left)) <
                               static_cast<std::uint64_t>(pos_left));
      (positive ? pos_left : neg_left)--;
      corpus.utterances.push_back(make_utterance(
          cfg, make_id(to_string(env), static_cast<std::size_t>(i)), env, positive, rng));
    }
  }

  Rng rng(derive_seed(cfg.seed, 3));
  out.test.name = "test";
  out.test.header = corpus_header(cfg, "test");
  const auto target_frames = static_cast<std::size_t>(std::llround(cfg.test_hours * 3600.0 / kFrameSeconds));
  std::size_t frames = 0;
  for (std::size_t i = 0; frames < target_frames; ++i) {
    const Environment env = kEnvironments[i % 3];
    const bool positive = rng.uniform() < cfg.test_positive_fraction;
    out.test.utterances.push_back(make_utterance(cfg, make_id("test", i), env, positive, rng));
    frames += out.test.utterances.back().num_frames();
  }
  return out;
}

bool contains_keyword(std::span<const Label> labels, int max_gap) {
  struct Run {
    Label label;
    std::size_t length;
  };
  std::vector<Run> runs;
  for (Label l : labels) {
    if (!runs.empty() && runs.back().label == l) {
      ++runs.back().length;
    } else {
      runs.push_back({l, 1});
    }
  }
  const auto gap_ok = [&](const Run& r) {
    return r.label == Label::Sil && (max_gap < 0 || r.length <= static_cast<std::size_t>(max_gap));
  };
  // Index after the optional silence run that follows `i`, if it leads to `want`.
  const auto next_word = [&](std::size_t i, Label want) -> std::size_t {
    std::size_t j = i + 1;
    if (j < runs.size() && gap_ok(runs[j])) ++j;
    return j < runs.size() && runs[j].label == want ? j : runs.size();
  };
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].label != Label::W1) continue;
    const std::size_t j = next_word(i, Label::W2);
    if (j == runs.size()) continue;
    if (next_word(j, Label::W3) != runs.size()) return true;
  }
  return false;
}

void fill_window(const Utterance& utt, std::size_t center, std::span<float> out) {
  if (utt.num_frames() == 0) throw ConfigError("utterance '" + utt.id + "' has no frames");
  if (out.size() != static_cast<std::size_t>(kWindowDim)) {
    throw ConfigError("window buffer must hold " + std::to_string(kWindowDim) + " values");
  }
  const auto last = static_cast<std::ptrdiff_t>(utt.num_frames()) - 1;
  for (int k = 0; k < kWindowFrames; ++k) {
    const std::ptrdiff_t t =
        std::clamp(static_cast<std::ptrdiff_t>(center) + k - kContext, std::ptrdiff_t{0}, last);
    const auto src = utt.frame(static_cast<std::size_t>(t));
    std::copy(src.begin(), src.end(), out.begin() + k * kFrameDim);
  }
}

std::vector<FeatureWindow> window_stream(const Utterance& utt) {
  if (utt.num_frames() == 0) throw ConfigError("utterance '" + utt.id + "' has no frames");
  std::vector<FeatureWindow> windows(utt.num_frames());
  for (std::size_t t = 0; t < utt.num_frames(); ++t) {
    fill_window(utt, t, windows[t].values);
    windows[t].label = utt.labels[t];
  }
  return windows;
}

// Layout (little-endian):
//   "HKWSCORP" | u32 version | u32 header_len | header JSON | u64 utterance count
//   per utterance: u16 id_len | id | u8 env | u8 positive | u32 frames |
//                  frames label chars (s,1,2,3) | frames*40 f32
std::vector<std::uint8_t> encode_corpus(const Corpus& corpus) {
  ByteWriter w;
  w.bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.u32(kCorpusVersion);
  nlohmann::json header = corpus.header.empty() ? nlohmann::json::object()
                                                : nlohmann::json::parse(corpus.header);
  header["name"] = corpus.name;
  const std::string header_text = header.dump();
  w.u32(static_cast<std::uint32_t>(header_text.size()));
  w.bytes(header_text);
  w.u64(corpus.utterances.size());
  for (const auto& utt : corpus.utterances) {
    if (utt.id.size() > UINT16_MAX) throw ConfigError("utterance id too long");
    w.u16(static_cast<std::uint16_t>(utt.id.size()));
    w.bytes(utt.id);
    w.u8(static_cast<std::uint8_t>(utt.env));
    w.u8(utt.is_positive ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(utt.num_frames()));
    for (Label l : utt.labels) w.u8(static_cast<std::uint8_t>(label_char(l)));
    for (float v : utt.values) w.f32(v);
  }
  return w.take();
}

Corpus decode_corpus(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.bytes(sizeof(kMagic), "magic") != std::string_view(kMagic, sizeof(kMagic))) {
    throw FormatError(0, "not a corpus file (bad magic)");
  }
  const std::size_t version_at = r.offset();
  if (r.u32("version") != kCorpusVersion) {
    throw FormatError(version_at, "unsupported corpus version");
  }
  const std::uint32_t header_len = r.u32("header length");
  const std::size_t header_at = r.offset();
  Corpus corpus;
  std::string header_text = r.bytes(header_len, "header");
  try {
    nlohmann::json header = nlohmann::json::parse(header_text);
    corpus.name = header.value("name", std::string{});
    header.erase("name");
    if (!header.empty()) corpus.header = header.dump();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(header_at, std::string("corpus header is not valid JSON: ") + e.what());
  }
  const std::uint64_t count = r.u64("utterance count");
  for (std::uint64_t i = 0; i < count; ++i) {
    Utterance utt;
    const std::uint16_t id_len = r.u16("id length");
    utt.id = r.bytes(id_len, "utterance id");
    const std::size_t env_at = r.offset();
    const std::uint8_t env = r.u8("environment");
    if (env > 2) throw FormatError(env_at, "invalid environment code");
    utt.env = static_cast<Environment>(env);
    const std::size_t pos_at = r.offset();
    const std::uint8_t positive = r.u8("polarity");
    if (positive > 1) throw FormatError(pos_at, "invalid polarity flag");
    utt.is_positive = positive == 1;
    const std::uint32_t frames = r.u32("frame count");
    utt.labels.resize(frames);
    for (std::uint32_t t = 0; t < frames; ++t) {
      const std::size_t at = r.offset();
      switch (r.u8("label")) {
        case 's': utt.labels[t] = Label::Sil; break;
        case '1': utt.labels[t] = Label::W1; break;
        case '2': utt.labels[t] = Label::W2; break;
        case '3': utt.labels[t] = Label::W3; break;
        default: throw FormatError(at, "invalid label character");
      }
    }
    if ((bytes.size() - r.offset()) / 4 < static_cast<std::size_t>(frames) * kFrameDim) {
      throw FormatError(r.offset(), "truncated corpus while reading frame values");
    }
    utt.values.resize(static_cast<std::size_t>(frames) * kFrameDim);
    for (auto& v : utt.values) v = r.f32("frame value");
    corpus.utterances.push_back(std::move(utt));
  }
  if (r.offset() != bytes.size()) throw FormatError(r.offset(), "trailing bytes after corpus");
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  const auto bytes = encode_corpus(corpus);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_corpus(bytes);
}

}  // namespace hnnkws
