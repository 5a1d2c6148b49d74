#include "hnnkws/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "hnnkws/error.hpp"
#include "hnnkws/rng.hpp"
#include "hnnkws/serialize.hpp"

namespace hnnkws {

namespace {

constexpr std::uint64_t kInitStream = 0x300;
constexpr std::uint64_t kBaselineStream = 0x200;
constexpr std::uint64_t kLevelStream = 0x100;

nlohmann::json hyper_to_json(const TrainHyper& h) {
  return {{"lr", h.lr}, {"epochs", h.epochs}, {"batch", h.batch}, {"frame_stride", h.frame_stride}};
}

void merge_hyper(TrainHyper& h, const nlohmann::json& j) {
  static const std::set<std::string> known{"lr", "epochs", "batch", "frame_stride"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown training key '" + key + "'");
  }
  if (j.contains("lr")) h.lr = j["lr"].get<double>();
  if (j.contains("epochs")) h.epochs = j["epochs"].get<int>();
  if (j.contains("batch")) h.batch = j["batch"].get<int>();
  if (j.contains("frame_stride")) h.frame_stride = j["frame_stride"].get<int>();
}

void validate(const TrainHyper& h, const std::string& what) {
  if (!(h.lr >= 0.0) || !std::isfinite(h.lr)) throw ConfigError(what + ": lr must be >= 0");
  if (h.epochs < 0) throw ConfigError(what + ": epochs must be >= 0");
  if (h.batch < 1) throw ConfigError(what + ": batch must be >= 1");
  if (h.frame_stride < 1) throw ConfigError(what + ": frame_stride must be >= 1");
}

std::vector<std::string> strategy_names(std::span<const CombinationStrategy> strategies) {
  std::vector<std::string> out;
  for (auto s : strategies) out.emplace_back(short_name(s));
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

const Catalog& configured_catalog(const RunConfig& cfg, Catalog& storage) {
  if (!cfg.catalog) return default_catalog();
  storage = load_catalog(*cfg.catalog);
  return storage;
}

// Per-frame level posteriors of an utterance, already combined per strategy.
struct UtteranceStreams {
  // [strategy][stream] -> frames
  std::vector<std::vector<PosteriorStream>> streams;
};

UtteranceStreams utterance_streams(const KwsModel& model, const Utterance& utt,
                                   std::span<const CombinationStrategy> strategies,
                                   OutputMode outputs) {
  UtteranceStreams out;
  out.streams.resize(strategies.size());
  const std::size_t n = utt.num_frames();
  const auto* hnn = std::get_if<HnnModel>(&model);
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const bool three = hnn && strategies[s] == CombinationStrategy::AnyLevelWakes;
    out.streams[s].assign(three ? 3 : 1, PosteriorStream(n));
  }
  // Frames go through the network in fixed-size chunks of windows.
  constexpr std::size_t kChunk = 256;
  std::vector<float> windows;
  for (std::size_t t0 = 0; t0 < n; t0 += kChunk) {
    const std::size_t rows = std::min(kChunk, n - t0);
    windows.resize(rows * kWindowDim);
    for (std::size_t r = 0; r < rows; ++r) {
      fill_window(utt, t0 + r, std::span<float>(windows).subspan(r * kWindowDim, kWindowDim));
    }
    if (!hnn) {
      const auto frames = baseline_forward_rows(std::get<BaselineModel>(model), windows, rows);
      for (auto& s : out.streams) std::copy(frames.begin(), frames.end(), s[0].begin() + static_cast<std::ptrdiff_t>(t0));
      continue;
    }
    const auto levels = hnn_forward_rows(*hnn, windows, rows, outputs);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        const auto frames = combine_posteriors(levels[r], strategies[s]);
        for (std::size_t k = 0; k < frames.size(); ++k) out.streams[s][k][t0 + r] = frames[k];
      }
    }
  }
  return out;
}

std::string series_name(const std::filesystem::path& model_path, CombinationStrategy strategy) {
  return model_path.stem().string() + "/" + std::string(short_name(strategy));
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

void resolve(RunConfig& cfg) {
  cfg.corpus.seed = cfg.seed;
  for (std::size_t l = 0; l < 3; ++l) cfg.levels[l].seed = derive_seed(cfg.seed, kLevelStream + l);
  cfg.baseline.seed = derive_seed(cfg.seed, kBaselineStream);
  validate(cfg);
}

void validate(const RunConfig& cfg) {
  validate(cfg.corpus);
  validate(cfg.decoder);
  for (std::size_t l = 0; l < 3; ++l) validate(cfg.levels[l], "level " + std::to_string(l + 1));
  validate(cfg.baseline, "baseline");
  if (cfg.strategies.empty()) throw ConfigError("at least one strategy is required");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  for (double fa : cfg.fa_points) {
    if (!(fa >= 0.0) || !std::isfinite(fa)) throw ConfigError("FA operating points must be >= 0");
  }
  if (cfg.inline_topology) {
    validate(*cfg.inline_topology);
  } else {
    default_catalog();  // a bad embedded catalog fails here rather than mid-run
  }
  (void)inference_mode(cfg);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["corpus"] = to_json(cfg.corpus);
  if (cfg.inline_topology) {
    j["topology"] = topology_to_json(*cfg.inline_topology);
  } else {
    j["topology"] = cfg.topology;
  }
  j["wiring"] = cfg.wiring ? nlohmann::json(std::string(to_string(*cfg.wiring))) : nlohmann::json(nullptr);
  j["levels"] = nlohmann::json::array();
  for (const auto& h : cfg.levels) j["levels"].push_back(hyper_to_json(h));
  j["baseline"] = hyper_to_json(cfg.baseline);
  j["decoder"] = {{"smooth_window", cfg.decoder.smooth_window},
                  {"class_threshold", cfg.decoder.class_threshold},
                  {"max_gap", cfg.decoder.max_gap},
                  {"refractory", cfg.decoder.refractory}};
  j["strategies"] = strategy_names(cfg.strategies);
  j["outputs"] = cfg.outputs ? nlohmann::json(std::string(to_string(*cfg.outputs))) : nlohmann::json(nullptr);
  j["fa_points"] = cfg.fa_points;
  j["data_dir"] = cfg.data_dir.generic_string();
  j["out_dir"] = cfg.out_dir.generic_string();
  j["model"] = cfg.model.generic_string();
  j["models"] = nlohmann::json::array();
  for (const auto& m : cfg.models) j["models"].push_back(m.generic_string());
  j["corpus_file"] = cfg.corpus_file ? nlohmann::json(cfg.corpus_file->generic_string()) : nlohmann::json(nullptr);
  j["catalog"] = cfg.catalog ? nlohmann::json(cfg.catalog->generic_string()) : nlohmann::json(nullptr);
  j["threads"] = cfg.threads;
  return j;
}

void merge_json(RunConfig& cfg, const nlohmann::json& j) {
  static const std::set<std::string> known{
      "seed",    "corpus",   "topology", "wiring",  "train",       "levels",  "baseline",
      "decoder", "strategy", "strategies", "outputs", "fa_points", "data_dir", "out_dir",
      "model",   "models",   "corpus_file", "catalog", "threads"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("corpus")) merge_json(cfg.corpus, j["corpus"]);
    if (j.contains("topology")) {
      if (j["topology"].is_string()) {
        cfg.topology = j["topology"].get<std::string>();
        cfg.inline_topology.reset();
      } else {
        cfg.inline_topology = topology_from_json(j["topology"]);
        cfg.topology = cfg.inline_topology->name;
      }
    }
    if (j.contains("wiring")) {
      if (j["wiring"].is_null()) {
        cfg.wiring.reset();
      } else {
        cfg.wiring = wiring_from_string(j["wiring"].get<std::string>());
      }
    }
    if (j.contains("train")) {
      for (auto& h : cfg.levels) merge_hyper(h, j["train"]);
      merge_hyper(cfg.baseline, j["train"]);
    }
    if (j.contains("levels")) {
      const auto& levels = j["levels"];
      if (!levels.is_array() || levels.size() > 3) throw ConfigError("levels: expected up to 3 entries");
      for (std::size_t l = 0; l < levels.size(); ++l) merge_hyper(cfg.levels[l], levels[l]);
    }
    if (j.contains("baseline")) merge_hyper(cfg.baseline, j["baseline"]);
    if (j.contains("decoder")) {
      const auto& d = j["decoder"];
      static const std::set<std::string> decoder_keys{"smooth_window", "class_threshold", "max_gap",
                                                      "refractory"};
      for (const auto& [key, value] : d.items()) {
        if (!decoder_keys.count(key)) throw ConfigError("unknown decoder key '" + key + "'");
      }
      cfg.decoder.smooth_window = d.value("smooth_window", cfg.decoder.smooth_window);
      cfg.decoder.class_threshold = d.value("class_threshold", cfg.decoder.class_threshold);
      cfg.decoder.max_gap = d.value("max_gap", cfg.decoder.max_gap);
      cfg.decoder.refractory = d.value("refractory", cfg.decoder.refractory);
    }
    if (j.contains("strategy")) cfg.strategies = {strategy_from_string(j["strategy"].get<std::string>())};
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : j["strategies"]) cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
    if (j.contains("outputs")) {
      if (j["outputs"].is_null()) {
        cfg.outputs.reset();
      } else {
        cfg.outputs = output_mode_from_string(j["outputs"].get<std::string>());
        // Averaging is the default strategy of all-level inference.
        if (*cfg.outputs == OutputMode::AllLevels && !j.contains("strategy") &&
            !j.contains("strategies")) {
          cfg.strategies = {CombinationStrategy::AveragePosteriors};
        }
      }
    }
    if (j.contains("fa_points")) cfg.fa_points = j["fa_points"].get<std::vector<double>>();
    if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();
    if (j.contains("models")) {
      cfg.models.clear();
      for (const auto& m : j["models"]) cfg.models.emplace_back(m.get<std::string>());
    }
    if (j.contains("corpus_file")) {
      if (j["corpus_file"].is_null()) {
        cfg.corpus_file.reset();
      } else {
        cfg.corpus_file = j["corpus_file"].get<std::string>();
      }
    }
    if (j.contains("catalog")) {
      if (j["catalog"].is_null()) {
        cfg.catalog.reset();
      } else {
        cfg.catalog = j["catalog"].get<std::string>();
      }
    }
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  merge_json(cfg, j);
  return cfg;
}

OutputMode inference_mode(const RunConfig& cfg) {
  const bool needs_all = std::any_of(cfg.strategies.begin(), cfg.strategies.end(), [](auto s) {
    return s != CombinationStrategy::ThirdOnly;
  });
  if (!cfg.outputs) return needs_all ? OutputMode::AllLevels : OutputMode::ThirdOnly;
  if (*cfg.outputs == OutputMode::ThirdOnly && needs_all) {
    throw ConfigError(
        "strategies 'any' and 'avg' need every level's posteriors; the pruned third-only inference "
        "has none. Rerun with --outputs all");
  }
  return *cfg.outputs;
}

KwsModel build_configured_model(const RunConfig& cfg) {
  const std::uint64_t seed = derive_seed(cfg.seed, kInitStream);
  if (cfg.inline_topology) {
    HnnTopology t = *cfg.inline_topology;
    if (cfg.wiring) t.wiring = *cfg.wiring;
    return build_hnn(t, seed);
  }
  Catalog storage;
  const Catalog& catalog = configured_catalog(cfg, storage);
  return build_model(catalog.find(cfg.topology), cfg.wiring, seed);
}

void train_model(KwsModel& model, const std::array<Corpus, 3>& train, const RunConfig& cfg,
                 std::ostream* log) {
  auto report = [&](const std::string& unit, const TrainingRecord& rec) {
    if (!log) return;
    for (std::size_t e = 0; e < rec.epoch_loss.size(); ++e) {
      *log << unit << " epoch " << (e + 1) << " loss " << std::setprecision(6) << rec.epoch_loss[e]
           << " (" << rec.samples_per_epoch << " frames)\n";
    }
  };
  if (auto* hnn = std::get_if<HnnModel>(&model)) {
    for (int l = 1; l <= 3; ++l) {
      const Environment env = hnn->topology.env_schedule[static_cast<std::size_t>(l - 1)];
      train_level(*hnn, l, train[static_cast<std::size_t>(env)], cfg.levels[static_cast<std::size_t>(l - 1)]);
      report("level " + std::to_string(l) + " [" + std::string(to_string(env)) + "]",
             hnn->levels[static_cast<std::size_t>(l - 1)].log);
    }
    return;
  }
  auto& base = std::get<BaselineModel>(model);
  train_baseline(base, train, cfg.baseline);
  report(base.name + " [quiet+video+incar]", base.log);
}

std::vector<std::vector<DecodedUtterance>> decode_corpus_with(
    const KwsModel& model, const Corpus& corpus, std::span<const CombinationStrategy> strategies,
    OutputMode outputs, const DecoderParams& params, int threads) {
  validate(params);
  if (std::holds_alternative<HnnModel>(model)) {
    for (auto s : strategies) {
      if (s != CombinationStrategy::ThirdOnly && outputs == OutputMode::ThirdOnly) {
        throw ConfigError(std::string("strategy '") + std::string(short_name(s)) +
                          "' needs all-level inference (--outputs all)");
      }
    }
  }
  const std::size_t n = corpus.utterances.size();
  std::vector<std::vector<DecodedUtterance>> out(strategies.size(), std::vector<DecodedUtterance>(n));
  const bool is_hnn = std::holds_alternative<HnnModel>(model);
  auto work = [&](std::size_t u) {
    const Utterance& utt = corpus.utterances[u];
    if (utt.num_frames() == 0) throw ConfigError("utterance '" + utt.id + "' has no frames");
    const auto streams = utterance_streams(model, utt, strategies, outputs);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const CombinationStrategy effective = is_hnn ? strategies[s] : CombinationStrategy::ThirdOnly;
      out[s][u] = {utt.id, decode(streams.streams[s], effective, params)};
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t u = 0; u < n; ++u) work(u);
    return out;
  }
  // Static interleaved partition; every result lands in its utterance's slot.
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t u = w; u < n; u += workers) work(u);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ScoredUtterance> scored(const Corpus& corpus, std::span<const DecodedUtterance> decoded) {
  if (decoded.size() != corpus.utterances.size()) throw ConfigError("decision/utterance count mismatch");
  std::vector<ScoredUtterance> out;
  out.reserve(decoded.size());
  for (std::size_t u = 0; u < decoded.size(); ++u) {
    const Utterance& utt = corpus.utterances[u];
    out.push_back({utt.id, utt.is_positive, utt.duration_seconds(), decoded[u].decision.confidence});
  }
  return out;
}

std::filesystem::path train_corpus_path(const std::filesystem::path& data_dir, Environment env) {
  return data_dir / "train" / (std::string(to_string(env)) + ".corpus");
}

std::filesystem::path test_corpus_path(const std::filesystem::path& data_dir) {
  return data_dir / "test.corpus";
}

void cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  const GeneratedCorpus gen = gen_corpus(cfg.corpus);
  for (const auto& w : gen.warnings) log << "warning: " << w << '\n';
  auto stats = [&](const Corpus& c, const std::filesystem::path& path) {
    std::size_t pos = 0;
    for (const auto& u : c.utterances) pos += u.is_positive ? 1 : 0;
    const double ratio = c.utterances.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(c.utterances.size());
    log << path.generic_string() << ": " << c.utterances.size() << " utterances, " << std::fixed
        << std::setprecision(3) << c.total_hours() << " h, positive ratio " << ratio << '\n'
        << std::defaultfloat;
    if (c.utterances.empty()) log << "warning: " << c.name << " corpus is empty\n";
  };
  std::error_code ec;
  std::filesystem::create_directories(cfg.data_dir / "train", ec);
  if (ec) throw IoError("cannot create '" + (cfg.data_dir / "train").string() + "': " + ec.message());
  for (Environment env : kEnvironments) {
    const auto path = train_corpus_path(cfg.data_dir, env);
    write_corpus(gen.train[static_cast<std::size_t>(env)], path);
    stats(gen.train[static_cast<std::size_t>(env)], path);
  }
  const auto test = test_corpus_path(cfg.data_dir);
  write_corpus(gen.test, test);
  stats(gen.test, test);
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  std::array<Corpus, 3> train;
  for (Environment env : kEnvironments) {
    const auto path = train_corpus_path(cfg.data_dir, env);
    if (!std::filesystem::exists(path)) {
      throw IoError("missing " + std::string(to_string(env)) + " training corpus '" + path.string() + "'");
    }
    train[static_cast<std::size_t>(env)] = read_corpus(path);
  }
  KwsModel model = build_configured_model(cfg);
  std::ostringstream epochs;
  train_model(model, train, cfg, &epochs);
  log << epochs.str();
  const nlohmann::json echo = to_json(cfg);
  {
    std::error_code ec;
    if (cfg.model.has_parent_path()) std::filesystem::create_directories(cfg.model.parent_path(), ec);
  }
  save_model(model, cfg.model, echo);

  // Training log next to the model: one row per unit and epoch.
  auto log_path = cfg.model;
  log_path += ".train.csv";
  auto out = open_output(log_path);
  out << "# " << nlohmann::json{{"tool_version", HNNKWS_VERSION}, {"config", echo}}.dump() << '\n';
  out << "unit,envs,epoch,loss,frames\n";
  auto rows = [&](const std::string& unit, const TrainingRecord& rec) {
    std::string envs;
    for (Environment e : rec.envs) envs += (envs.empty() ? "" : "+") + std::string(to_string(e));
    for (std::size_t e = 0; e < rec.epoch_loss.size(); ++e) {
      out << unit << ',' << envs << ',' << (e + 1) << ',' << format_double(rec.epoch_loss[e]) << ','
          << rec.samples_per_epoch << '\n';
    }
  };
  if (const auto* hnn = std::get_if<HnnModel>(&model)) {
    for (int l = 0; l < 3; ++l) rows("level" + std::to_string(l + 1), hnn->levels[static_cast<std::size_t>(l)].log);
  } else {
    rows("network", std::get<BaselineModel>(model).log);
  }
  finish(out, log_path);
  log << "model written to " << cfg.model.generic_string() << '\n';
}

void cmd_decode(const RunConfig& cfg, std::ostream& log, const std::filesystem::path& out_csv) {
  const KwsModel model = load_model(cfg.model);
  const Corpus corpus = read_corpus(cfg.corpus_file.value_or(test_corpus_path(cfg.data_dir)));
  const CombinationStrategy strategy = cfg.strategies.front();
  const std::array<CombinationStrategy, 1> one{strategy};
  const auto decoded = decode_corpus_with(model, corpus, one, inference_mode(cfg), cfg.decoder, cfg.threads);
  auto out = open_output(out_csv);
  write_decisions_csv(out, decoded[0], to_json(cfg));
  finish(out, out_csv);
  std::size_t woke = 0;
  for (const auto& d : decoded[0]) woke += d.decision.woke ? 1 : 0;
  log << decoded[0].size() << " utterances decoded (" << short_name(strategy) << "), " << woke
      << " woke; decisions in " << out_csv.generic_string() << '\n';
}

void cmd_roc(const RunConfig& cfg, std::ostream& log) {
  const OutputMode outputs = inference_mode(cfg);
  const Corpus corpus = read_corpus(cfg.corpus_file.value_or(test_corpus_path(cfg.data_dir)));
  const auto models = cfg.models.empty() ? std::vector<std::filesystem::path>{cfg.model} : cfg.models;
  std::vector<NamedRoc> rocs;
  for (const auto& path : models) {
    const KwsModel model = load_model(path);
    const auto decoded = decode_corpus_with(model, corpus, cfg.strategies, outputs, cfg.decoder, cfg.threads);
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
      const auto scores = scored(corpus, decoded[s]);
      rocs.push_back({series_name(path, cfg.strategies[s]), sweep_roc(scores, default_thresholds(scores))});
      log << rocs.back().name << ": " << rocs.back().points.size() << " ROC points\n";
    }
  }
  const nlohmann::json echo = to_json(cfg);
  const auto roc_path = cfg.out_dir / "roc.csv";
  auto roc = open_output(roc_path);
  write_roc_csv(roc, rocs, echo);
  finish(roc, roc_path);
  const auto summary_path = cfg.out_dir / "summary.csv";
  auto summary = open_output(summary_path);
  const auto rows = compare_models(rocs, cfg.fa_points);
  write_summary_csv(summary, rows, echo);
  finish(summary, summary_path);
  for (const auto& r : rows) {
    log << "FA " << r.fa_point << "/h  " << r.model << "  recall "
        << (r.recall ? format_double(*r.recall) : std::string("not reached")) << (r.best ? "  *" : "")
        << '\n';
  }
}

void cmd_complexity(const RunConfig& cfg, std::ostream& log) {
  Catalog storage;
  const Catalog& catalog = configured_catalog(cfg, storage);
  const auto rows = complexity_report(catalog);
  const auto path = cfg.out_dir / "complexity.csv";
  auto out = open_output(path);
  write_complexity_csv(out, rows, to_json(cfg));
  finish(out, path);
  log << rows.size() << " complexity rows written to " << path.generic_string() << '\n';
}

}  // namespace hnnkws
