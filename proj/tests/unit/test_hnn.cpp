#include <doctest.h>

#include "hnnkws/catalog.hpp"
#include "hnnkws/data_synth.hpp"
#include "hnnkws/error.hpp"
#include "hnnkws/hnn.hpp"
#include "hnnkws/rng.hpp"

using namespace hnnkws;

namespace {

HnnTopology tiny_topology(BnWiring wiring = BnWiring::AllBn) {
  HnnTopology t;
  t.name = "tiny";
  t.levels[0] = {{8}, 4, {8}, true, std::nullopt};
  t.levels[1] = {{8}, 3, {8}, true, std::nullopt};
  t.levels[2] = {{8}, std::nullopt, {}, true, std::nullopt};
  t.wiring = wiring;
  return t;
}

GeneratedCorpus toy_corpus(double noise = 0.1) {
  CorpusConfig cfg;
  cfg.seed = 21;
  cfg.set_utts_per_env(12);
  cfg.test_hours = 0.0;
  cfg.noise = {noise, noise, noise};
  return gen_corpus(cfg);
}

TrainHyper quick(int epochs, double lr = 0.05) {
  TrainHyper h;
  h.epochs = epochs;
  h.lr = lr;
  h.batch = 16;
  h.seed = 3;
  h.frame_stride = 2;
  return h;
}

std::vector<float> random_windows(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> w(rows * kWindowDim);
  for (auto& v : w) v = static_cast<float>(rng.normal());
  return w;
}

}  // namespace

TEST_CASE("bottleneck wiring") {
  const HnnTopology all = tiny_topology(BnWiring::AllBn);
  CHECK(wired_bottlenecks(all, 1).empty());
  CHECK(wired_bottlenecks(all, 2) == std::vector<int>{4});
  CHECK(wired_bottlenecks(all, 3) == std::vector<int>{4, 3});
  CHECK(wired_bottlenecks(tiny_topology(BnWiring::OneBn), 3) == std::vector<int>{3});

  const HnnModel m = build_hnn(all, 1);
  CHECK(m.levels[0].net.body_input_dim() == static_cast<std::size_t>(kWindowDim));
  CHECK(m.levels[1].net.body_input_dim() == static_cast<std::size_t>(kWindowDim + 4));
  CHECK(m.levels[2].net.body_input_dim() == static_cast<std::size_t>(kWindowDim + 7));
  CHECK(build_hnn(tiny_topology(BnWiring::OneBn), 1).levels[2].net.body_input_dim() ==
        static_cast<std::size_t>(kWindowDim + 3));
}

TEST_CASE("topology validation") {
  HnnTopology t = tiny_topology();
  t.levels[0].bn.reset();
  CHECK_THROWS_AS(validate(t), ConfigError);
  t = tiny_topology();
  t.levels[1].has_output = false;
  CHECK_THROWS_AS(validate(t), ConfigError);
  CHECK_NOTHROW(validate(tiny_topology()));
}

TEST_CASE("model construction is deterministic per seed") {
  CHECK(build_hnn(tiny_topology(), 5) == build_hnn(tiny_topology(), 5));
  CHECK_FALSE(build_hnn(tiny_topology(), 5) == build_hnn(tiny_topology(), 6));
}

TEST_CASE("pruned inference reproduces the level-3 posterior exactly") {
  const HnnModel m = build_hnn(tiny_topology(), 2);
  const std::size_t rows = 20;
  const auto w = random_windows(rows, 4);
  const auto pruned = hnn_forward_rows(m, w, rows, OutputMode::ThirdOnly);
  const auto full = hnn_forward_rows(m, w, rows, OutputMode::AllLevels);
  for (std::size_t r = 0; r < rows; ++r) {
    CHECK_FALSE(pruned[r][0].has_value());
    CHECK_FALSE(pruned[r][1].has_value());
    REQUIRE(full[r][0].has_value());
    CHECK(*pruned[r][2] == *full[r][2]);
    const auto single = hnn_forward(m, std::span(w).subspan(r * kWindowDim, kWindowDim),
                                    OutputMode::AllLevels);
    CHECK(single == full[r]);
  }
}

TEST_CASE("bottleneck features are post-activation") {
  const HnnModel m = build_hnn(tiny_topology(), 2);
  const auto w = random_windows(1, 9);
  const auto bn1 = extract_bottleneck(m, 1, w);
  const auto bn2 = extract_bottleneck(m, 2, w);
  CHECK(bn1.size() == 4u);
  CHECK(bn2.size() == 3u);
  for (float v : bn1) CHECK(v >= 0.0f);
  CHECK_THROWS_AS(extract_bottleneck(m, 3, w), ConfigError);
}

TEST_CASE("posterior combination") {
  LevelPosteriors p;
  p[0] = PosteriorFrame{1, 0, 0, 0};
  p[1] = PosteriorFrame{0, 1, 0, 0};
  p[2] = PosteriorFrame{0, 0, 0.5, 0.5};
  CHECK(combine_posteriors(p, CombinationStrategy::ThirdOnly) ==
        std::vector<PosteriorFrame>{*p[2]});
  const auto avg = combine_posteriors(p, CombinationStrategy::AveragePosteriors);
  REQUIRE(avg.size() == 1u);
  CHECK(avg[0][0] == doctest::Approx(1.0 / 3));
  CHECK(avg[0][3] == doctest::Approx(1.0 / 6));
  CHECK(combine_posteriors(p, CombinationStrategy::AnyLevelWakes).size() == 3u);
  p[0].reset();
  CHECK_THROWS_AS(combine_posteriors(p, CombinationStrategy::AveragePosteriors), ConfigError);
}

TEST_CASE("staged training order and environments are enforced") {
  const GeneratedCorpus g = toy_corpus();
  HnnModel m = build_hnn(tiny_topology(), 1);
  CHECK_THROWS_AS(train_level(m, 2, g.train[1], quick(1)), ConfigError);
  CHECK_THROWS_AS(train_level(m, 1, g.train[1], quick(1)), ConfigError);
  CHECK_THROWS_AS(train_level(m, 0, g.train[0], quick(1)), ConfigError);
  train_level(m, 1, g.train[0], quick(1));
  CHECK(m.levels[0].log.trained);
  train_level(m, 2, g.train[1], quick(1));
  // Retraining a level below a trained one would invalidate its inputs.
  CHECK_THROWS_AS(train_level(m, 1, g.train[0], quick(1)), ConfigError);
}

TEST_CASE("training one level leaves the others untouched") {
  const GeneratedCorpus g = toy_corpus();
  HnnModel m = build_hnn(tiny_topology(), 1);
  train_level(m, 1, g.train[0], quick(1));
  const HnnModel before = m;
  train_level(m, 2, g.train[1], quick(2));
  CHECK(m.levels[0] == before.levels[0]);
  CHECK(m.levels[2] == before.levels[2]);
  CHECK_FALSE(m.levels[1].net == before.levels[1].net);
  CHECK(m.levels[1].log.envs == std::vector<Environment>{Environment::Video});
}

TEST_CASE("zero learning rate records the loss but keeps the weights") {
  const GeneratedCorpus g = toy_corpus();
  HnnModel m = build_hnn(tiny_topology(), 1);
  const LevelNet before = m.levels[0].net;
  train_level(m, 1, g.train[0], quick(2, 0.0));
  CHECK(m.levels[0].net == before);
  REQUIRE(m.levels[0].log.epoch_loss.size() == 2u);
  CHECK(m.levels[0].log.epoch_loss[0] > 0.0);
  CHECK(m.levels[0].log.epoch_loss[0] == doctest::Approx(m.levels[0].log.epoch_loss[1]));
}

TEST_CASE("loss falls on an easily separable corpus") {
  const GeneratedCorpus g = toy_corpus(0.05);
  HnnModel m = build_hnn(tiny_topology(), 1);
  train_level(m, 1, g.train[0], quick(50, 0.1));
  const auto& loss = m.levels[0].log.epoch_loss;
  REQUIRE(loss.size() == 50u);
  CHECK(loss.back() < loss.front());
  CHECK(loss.back() < 0.1);
}

TEST_CASE("training is reproducible") {
  const GeneratedCorpus g = toy_corpus();
  HnnModel a = build_hnn(tiny_topology(), 1);
  HnnModel b = build_hnn(tiny_topology(), 1);
  train_level(a, 1, g.train[0], quick(2));
  train_level(b, 1, g.train[0], quick(2));
  CHECK(a == b);
}

TEST_CASE("baseline trains on all environments") {
  const GeneratedCorpus g = toy_corpus();
  BaselineModel b{"small", make_dense_net({8}, kNumClasses, 4), {}, 4};
  train_baseline(b, g.train, quick(1));
  CHECK(b.log.trained);
  CHECK(b.log.envs.size() == 3u);
  const auto w = random_windows(3, 1);
  const auto rows = baseline_forward_rows(b, w, 3);
  CHECK(rows[1] == baseline_forward(b, std::span(w).subspan(kWindowDim, kWindowDim)));
}

TEST_CASE("catalog models and complexity counters") {
  const Catalog& cat = default_catalog();
  const auto hnn1 = std::get<HnnModel>(build_model(cat.find("HNN1"), BnWiring::AllBn, 1));
  CHECK(hnn_macs(hnn1, OutputMode::AllLevels) == 963584u);
  CHECK(hnn_macs(hnn1, OutputMode::ThirdOnly) == 764928u);
  const auto one = std::get<HnnModel>(build_model(cat.find("HNN1"), BnWiring::OneBn, 1));
  CHECK(hnn_macs(one, OutputMode::AllLevels) == 930816u);
  const auto dnn = std::get<BaselineModel>(build_model(cat.find("DNN"), std::nullopt, 1));
  CHECK(level_macs(dnn.net) == 751616u);
  const auto mhnn = std::get<HnnModel>(build_model(cat.find("MHNN"), BnWiring::AllBn, 1));
  REQUIRE(mhnn.levels[0].net.front.has_value());
  CHECK(mhnn.levels[0].net.front->output_shape() == Shape{64, 2, 4});
  CHECK_THROWS_AS(cat.find("HNN9"), ConfigError);
}
