// Acceptance runner: one PASS/FAIL line per criterion, details indented below it.
// Exit status is 0 only when every selected criterion passes.
//
//   hnnkws_acceptance [--only N]... [--report-dir DIR] [--fallback-seeds a,b,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "../support/fst_oracle.hpp"
#include "../support/gradcheck.hpp"
#include "hnnkws/catalog.hpp"
#include "hnnkws/eval.hpp"
#include "hnnkws/hnn.hpp"
#include "hnnkws/pipeline.hpp"
#include "hnnkws/rng.hpp"

namespace {

using namespace hnnkws;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Pinned tolerances.
constexpr int kGradNetworks = 50;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kDeltaTolerance = 90000.0;
constexpr double kComplexitySeconds = 1.0;
constexpr int kPruneWindows = 1000;
constexpr double kFstSeconds = 60.0;
constexpr double kOperatingFa = 1.0;
constexpr double kPipelineSeconds = 15.0 * 60.0;
constexpr int kSeedsRequired = 3;
constexpr std::uint64_t kPrimarySeed = 42;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string fmt_recall(const std::optional<double>& r) { return r ? fmt(*r) : "not_reached"; }

struct Report {
  int failures = 0;
  void line(int id, bool pass, const std::string& text) {
    if (!pass) ++failures;
    std::cout << (pass ? "PASS " : "FAIL ") << id << "  " << text << std::endl;
  }
  static void detail(const std::string& text) { std::cout << "       " << text << std::endl; }
};

void criterion_gradients(Report& report) {
  const auto start = Clock::now();
  Rng rng(20240101);
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < kGradNetworks; ++i) {
    const double err = testing::max_relative_error(testing::random_case(rng, i % 2 == 1));
    worst = std::max(worst, err);
    if (!(err < kGradTolerance)) ++bad;
  }
  const double secs = seconds_since(start);
  report.line(1, bad == 0 && secs < kGradSeconds,
              "gradient oracle: " + std::to_string(kGradNetworks) + " dense/conv networks, " +
                  std::to_string(bad) + " over tolerance, max relative error " + fmt(worst, 3) +
                  " (< " + fmt(kGradTolerance) + "), " + fmt(secs, 3) + " s (< 60 s)");
}

std::uint64_t product(const std::string& term) {
  std::uint64_t p = 1;
  std::istringstream in(term);
  for (std::string f; std::getline(in, f, '*');) p *= std::stoull(f);
  return p;
}

void criterion_complexity(Report& report) {
  const auto start = Clock::now();
  const auto rows = complexity_report(default_catalog());
  auto macs = [&](const std::string& model, bool all_output) -> std::uint64_t {
    for (const auto& r : rows) {
      if (r.model == model && r.all_bn == true && r.all_output == all_output) return r.macs;
    }
    return 0;
  };
  struct Delta {
    const char* model;
    std::uint64_t expected;
    double reported;
  };
  const Delta deltas[] = {{"HNN1", 198656, 190000.0}, {"HNN2", 165888, 190000.0},
                          {"HNN3", 133120, 110000.0}};
  bool ok = true;
  std::ostringstream what;
  for (const auto& d : deltas) {
    const std::uint64_t delta = macs(d.model, true) - macs(d.model, false);
    const bool pass = delta == d.expected &&
                      std::abs(static_cast<double>(delta) - d.reported) <= kDeltaTolerance;
    ok = ok && pass;
    what << d.model << " " << delta << " vs reported " << fmt(d.reported / 1e6, 2) << "M; ";
  }

  int golden_rows = 0;
  int golden_bad = 0;
  std::ifstream in(HNNKWS_TEST_DATA_DIR "/complexity_golden.json");
  if (!in) {
    ok = false;
    ++golden_bad;
  } else {
    const auto golden = nlohmann::json::parse(in)["rows"];
    golden_rows = static_cast<int>(golden.size());
    if (golden.size() != rows.size()) ++golden_bad;
    for (std::size_t i = 0; i < std::min(golden.size(), rows.size()); ++i) {
      const auto& g = golden[i];
      std::uint64_t sum = 0;
      for (const auto& t : g["terms"]) sum += product(t.get<std::string>());
      const auto expected = g["macs"].get<std::uint64_t>();
      const bool match = sum == expected && rows[i].model == g["model"].get<std::string>() &&
                         rows[i].macs == expected;
      if (!match) {
        ++golden_bad;
        Report::detail("golden mismatch: " + rows[i].model + " " + std::to_string(rows[i].macs) +
                       " vs " + std::to_string(expected));
      }
    }
  }
  const double secs = seconds_since(start);
  ok = ok && golden_bad == 0 && secs < kComplexitySeconds;
  report.line(2, ok,
              "complexity deltas: " + what.str() + "golden file " + std::to_string(golden_rows) +
                  " rows, " + std::to_string(golden_bad) + " mismatches, " + fmt(secs, 3) + " s");
}

void criterion_pruning(Report& report) {
  Rng rng(77);
  std::vector<float> windows(static_cast<std::size_t>(kPruneWindows) * kWindowDim);
  for (auto& v : windows) v = static_cast<float>(rng.normal());
  int differing = 0;
  for (BnWiring wiring : {BnWiring::AllBn, BnWiring::OneBn}) {
    const auto model = std::get<HnnModel>(build_model(default_catalog().find("HNN1"), wiring, 5));
    const auto pruned = hnn_forward_rows(model, windows, kPruneWindows, OutputMode::ThirdOnly);
    const auto full = hnn_forward_rows(model, windows, kPruneWindows, OutputMode::AllLevels);
    for (int r = 0; r < kPruneWindows; ++r) {
      const auto& a = pruned[static_cast<std::size_t>(r)][2];
      const auto& b = full[static_cast<std::size_t>(r)][2];
      if (!a || !b || std::memcmp(a->data(), b->data(), sizeof(PosteriorFrame)) != 0) ++differing;
    }
  }
  report.line(3, differing == 0,
              "pruning soundness: " + std::to_string(kPruneWindows) +
                  " random windows x {AllBn, OneBn} through HNN1, " + std::to_string(differing) +
                  " level-3 posteriors not bit-identical");
}

void criterion_fst(Report& report) {
  const auto start = Clock::now();
  const int default_gap = DecoderParams{}.max_gap;
  int mismatches = 0;
  std::string gaps;
  for (int gap : {0, 2, default_gap}) {
    mismatches += testing::exhaustive_mismatches(gap);
    gaps += (gaps.empty() ? "" : ", ") + std::to_string(gap);
  }
  const double secs = seconds_since(start);
  report.line(4, mismatches == 0 && secs < kFstSeconds,
              "FST oracle: all 5^8 label strings at max_gap {" + gaps + "}, " +
                  std::to_string(mismatches) + " mismatches against the regex, " + fmt(secs, 3) +
                  " s (< 60 s)");
}

// One decoded model/strategy pair.
struct Decoded {
  std::string model;
  CombinationStrategy strategy;
  std::vector<DecodedUtterance> decisions;
  std::vector<ScoredUtterance> scored;
  std::vector<RocPoint> roc;
  std::optional<double> recall;
};

struct SeedRun {
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::vector<Decoded> decoded;
  const Decoded& find(const std::string& model, CombinationStrategy s) const {
    for (const auto& d : decoded) {
      if (d.model == model && d.strategy == s) return d;
    }
    throw std::logic_error("missing decode " + model);
  }
  bool hnn_beats_dnn() const {
    const auto& one = find("HNN1/OneBn", CombinationStrategy::ThirdOnly).recall;
    const auto& dnn = find("DNN", CombinationStrategy::ThirdOnly).recall;
    return one && dnn && *one >= *dnn;
  }
  bool one_beats_all() const {
    const auto& one = find("HNN1/OneBn", CombinationStrategy::ThirdOnly).recall;
    const auto& all = find("HNN1/AllBn", CombinationStrategy::ThirdOnly).recall;
    return one && all && *one >= *all;
  }
  bool pass() const { return hnn_beats_dnn() && one_beats_all() && seconds < kPipelineSeconds; }
};

void add_decodes(SeedRun& run, const std::string& name, const KwsModel& model, const Corpus& test,
                 std::span<const CombinationStrategy> strategies, OutputMode outputs,
                 const RunConfig& cfg) {
  auto all = decode_corpus_with(model, test, strategies, outputs, cfg.decoder, cfg.threads);
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    Decoded d{name, strategies[i], std::move(all[i]), {}, {}, {}};
    d.scored = scored(test, d.decisions);
    d.roc = sweep_roc(d.scored, default_thresholds(d.scored));
    d.recall = recall_at_fa(d.roc, kOperatingFa);
    run.decoded.push_back(std::move(d));
  }
}

// Default corpus and training for `seed`: HNN1 AllBn, HNN1 OneBn sharing the
// trained levels 1-2, and the matched-complexity DNN.
SeedRun directional_run(std::uint64_t seed) {
  const auto start = Clock::now();
  RunConfig cfg = default_run_config();
  cfg.seed = seed;
  resolve(cfg);
  const GeneratedCorpus g = gen_corpus(cfg.corpus);
  const std::array<Corpus, 3> train{g.train[0], g.train[1], g.train[2]};
  SeedRun run;
  run.seed = seed;
  const CombinationStrategy strategies[] = {CombinationStrategy::ThirdOnly,
                                            CombinationStrategy::AnyLevelWakes,
                                            CombinationStrategy::AveragePosteriors};

  RunConfig all_cfg = cfg;
  all_cfg.topology = "HNN1";
  all_cfg.wiring = BnWiring::AllBn;
  KwsModel all = build_configured_model(all_cfg);
  train_model(all, train, all_cfg);
  add_decodes(run, "HNN1/AllBn", all, g.test, strategies, OutputMode::AllLevels, all_cfg);

  // Levels 1-2 do not depend on the wiring, so the OneBn model reuses them.
  RunConfig one_cfg = cfg;
  one_cfg.topology = "HNN1";
  one_cfg.wiring = BnWiring::OneBn;
  KwsModel one = build_configured_model(one_cfg);
  auto& one_hnn = std::get<HnnModel>(one);
  const auto& all_hnn = std::get<HnnModel>(all);
  one_hnn.levels[0] = all_hnn.levels[0];
  one_hnn.levels[1] = all_hnn.levels[1];
  train_level(one_hnn, 3, g.train[2], one_cfg.levels[2]);
  add_decodes(run, "HNN1/OneBn", one, g.test, strategies, OutputMode::AllLevels, one_cfg);

  RunConfig dnn_cfg = cfg;
  dnn_cfg.topology = "DNN";
  KwsModel dnn = build_configured_model(dnn_cfg);
  train_model(dnn, train, dnn_cfg);
  const CombinationStrategy single[] = {CombinationStrategy::ThirdOnly};
  add_decodes(run, "DNN", dnn, g.test, single, OutputMode::ThirdOnly, dnn_cfg);

  run.seconds = seconds_since(start);
  return run;
}

void print_seed(const SeedRun& run) {
  auto r = [&](const char* model, CombinationStrategy s) {
    return fmt_recall(run.find(model, s).recall);
  };
  const auto third = CombinationStrategy::ThirdOnly;
  Report::detail("seed " + std::to_string(run.seed) + ": recall at FA " + fmt(kOperatingFa) +
                 "/h, third-level output: HNN1/OneBn " + r("HNN1/OneBn", third) +
                 ", HNN1/AllBn " + r("HNN1/AllBn", third) + ", DNN " + r("DNN", third) +
                 "; pipeline " + fmt(run.seconds, 4) + " s; " + (run.pass() ? "pass" : "fail"));
  for (auto s : {CombinationStrategy::AnyLevelWakes, CombinationStrategy::AveragePosteriors}) {
    Report::detail("  all-level " + std::string(short_name(s)) + ": HNN1/OneBn " +
                   r("HNN1/OneBn", s) + ", HNN1/AllBn " + r("HNN1/AllBn", s));
  }
}

void write_directional_csv(const fs::path& dir, const std::vector<SeedRun>& runs) {
  fs::create_directories(dir);
  std::ofstream out(dir / "directional.csv");
  out << "seed,model,strategy,fa_per_hour,recall,pipeline_seconds\n";
  for (const auto& run : runs) {
    for (const auto& d : run.decoded) {
      out << run.seed << ',' << d.model << ',' << short_name(d.strategy) << ','
          << format_double(kOperatingFa) << ',' << (d.recall ? format_double(*d.recall) : "not_reached")
          << ',' << format_double(run.seconds) << '\n';
    }
  }
}

void criterion_dominance(Report& report, const SeedRun& run) {
  int superset_violations = 0;
  int roc_violations = 0;
  std::size_t woke_a = 0;
  std::size_t woke_b = 0;
  for (const char* model : {"HNN1/AllBn", "HNN1/OneBn"}) {
    const auto& a = run.find(model, CombinationStrategy::ThirdOnly);
    const auto& b = run.find(model, CombinationStrategy::AnyLevelWakes);
    for (std::size_t i = 0; i < a.decisions.size(); ++i) {
      woke_a += a.decisions[i].decision.woke;
      woke_b += b.decisions[i].decision.woke;
      if (a.decisions[i].decision.woke && !b.decisions[i].decision.woke) ++superset_violations;
    }
    std::vector<ScoredUtterance> both = a.scored;
    both.insert(both.end(), b.scored.begin(), b.scored.end());
    const auto grid = default_thresholds(both);
    const auto roc_a = sweep_roc(a.scored, grid);
    const auto roc_b = sweep_roc(b.scored, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (roc_b[i].recall < roc_a[i].recall || roc_b[i].fa_per_hour < roc_a[i].fa_per_hour) {
        ++roc_violations;
      }
    }
  }
  report.line(5, superset_violations == 0 && roc_violations == 0,
              "strategy dominance (seed " + std::to_string(run.seed) + ", HNN1 AllBn and OneBn): " +
                  std::to_string(woke_a) + " third-level wakes, " + std::to_string(woke_b) +
                  " any-level wakes, " + std::to_string(superset_violations) +
                  " superset violations, " + std::to_string(roc_violations) +
                  " thresholds where any-level recall or FA/h falls below third-level");
}

void criterion_monotone(Report& report, const std::vector<SeedRun>& runs) {
  int curves = 0;
  int violations = 0;
  for (const auto& run : runs) {
    for (const auto& d : run.decoded) {
      ++curves;
      for (std::size_t i = 1; i < d.roc.size(); ++i) {
        if (!(d.roc[i].threshold > d.roc[i - 1].threshold) ||
            d.roc[i].recall > d.roc[i - 1].recall ||
            d.roc[i].fa_per_hour > d.roc[i - 1].fa_per_hour) {
          ++violations;
        }
      }
    }
  }
  report.line(6, violations == 0 && curves > 0,
              "ROC monotonicity: " + std::to_string(curves) + " model/strategy curves, " +
                  std::to_string(violations) + " non-monotone steps");
}

// Fallback seeds run only when seed 42 fails, and stop once the 3-of-5
// outcome is decided either way.
void extend_runs(std::vector<SeedRun>& runs, const std::vector<std::uint64_t>& fallback) {
  if (runs.front().pass()) return;
  int passed = 0;
  int failed = 1;
  const int total = 1 + static_cast<int>(fallback.size());
  for (std::uint64_t seed : fallback) {
    if (passed >= kSeedsRequired || total - failed < kSeedsRequired) break;
    std::cerr << "seed " << runs.front().seed << " failed the margin, running seed " << seed << std::endl;
    runs.push_back(directional_run(seed));
    (runs.back().pass() ? passed : failed) += 1;
  }
}

void criterion_directional(Report& report, const std::vector<SeedRun>& runs, int planned) {
  const int passed = static_cast<int>(
      std::count_if(runs.begin(), runs.end(), [](const SeedRun& r) { return r.pass(); }));
  const bool primary = runs.front().pass();
  const int run_count = static_cast<int>(runs.size());
  std::string text = "directional experiment: ";
  if (primary) {
    text += "seed 42 passes (HNN1/OneBn >= DNN and OneBn >= AllBn at FA 1/h, runtime < 15 min)";
  } else {
    text += "seed 42 fails the margin; " + std::to_string(passed) + " of " +
            std::to_string(run_count) + " seeds run pass (need " + std::to_string(kSeedsRequired) +
            " of " + std::to_string(planned) + ")";
    if (run_count < planned) text += ", remaining seeds skipped as the outcome is decided";
  }
  report.line(7, primary || passed >= kSeedsRequired, text);
  for (const auto& run : runs) print_seed(run);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reduced corpus so the whole pipeline can run twice; the code path is the one
// behind the CLI subcommands.
void criterion_determinism(Report& report, const fs::path& dir) {
  const fs::path root = dir / "determinism";
  fs::remove_all(root);
  RunConfig cfg = default_run_config();
  merge_json(cfg, nlohmann::json::parse(R"({
    "seed": 42,
    "corpus": {"utts_per_env": 150, "test_hours": 0.1},
    "strategies": ["third", "any", "avg"]
  })"));
  cfg.data_dir = root / "data";
  cfg.out_dir = root / "out";
  cfg.model = root / "out" / "model.json";
  resolve(cfg);
  const std::vector<fs::path> artifacts = {
      cfg.model,
      cfg.out_dir / "decisions.csv",
      cfg.out_dir / "roc.csv",
      cfg.out_dir / "summary.csv",
      cfg.out_dir / "complexity.csv",
      test_corpus_path(cfg.data_dir),
      train_corpus_path(cfg.data_dir, Environment::Quiet),
      train_corpus_path(cfg.data_dir, Environment::Video),
      train_corpus_path(cfg.data_dir, Environment::Incar),
  };
  std::vector<std::string> first;
  int differing = 0;
  std::ostringstream log;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(root);
    cmd_gen_data(cfg, log);
    cmd_train(cfg, log);
    cmd_decode(cfg, log, cfg.out_dir / "decisions.csv");
    cmd_roc(cfg, log);
    cmd_complexity(cfg, log);
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
      const std::string bytes = slurp(artifacts[i]);
      if (pass == 0) {
        first.push_back(bytes);
      } else if (bytes != first[i] || bytes.empty()) {
        ++differing;
        Report::detail("differs: " + artifacts[i].filename().string());
      }
    }
  }
  report.line(8, differing == 0,
              "determinism: gen-data, train, decode, roc, complexity run twice with one config, " +
                  std::to_string(artifacts.size()) + " artifacts compared, " +
                  std::to_string(differing) + " not byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hnnkws acceptance criteria"};
  std::vector<int> only;
  std::string report_dir = "acceptance_out";
  std::vector<std::uint64_t> fallback{43, 44, 45, 46};
  app.add_option("--only", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_option("--report-dir", report_dir, "Directory for the experiment report and scratch files");
  app.add_option("--fallback-seeds", fallback, "Seeds tried when seed 42 fails the margin")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto want = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  Report report;
  try {
    if (want(1)) criterion_gradients(report);
    if (want(2)) criterion_complexity(report);
    if (want(3)) criterion_pruning(report);
    if (want(4)) criterion_fst(report);
    if (want(5) || want(6) || want(7)) {
      std::vector<SeedRun> runs{directional_run(kPrimarySeed)};
      if (want(7)) extend_runs(runs, fallback);
      if (want(5)) criterion_dominance(report, runs.front());
      if (want(6)) criterion_monotone(report, runs);
      if (want(7)) criterion_directional(report, runs, 1 + static_cast<int>(fallback.size()));
      write_directional_csv(report_dir, runs);
      Report::detail("per-seed recall written to " + (fs::path(report_dir) / "directional.csv").string());
    }
    if (want(8)) criterion_determinism(report, report_dir);
  } catch (const std::exception& e) {
    std::cout << "FAIL   aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (report.failures == 0 ? "all criteria passed" : std::to_string(report.failures) + " criteria failed")
            << std::endl;
  return report.failures == 0 ? 0 : 1;
}
