// Copyright 2026 The decipher Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "decipher/report.hpp"
#include "decipher/trainer.hpp"

namespace decipher {
namespace {

TEST(Demand, RampFromThirtyPercent) {
  DemandSchedule s;
  s.kind = ScheduleKind::ramp;
  s.cognates = 100;
  s.iterations = 5;
  std::vector<std::int64_t> got;
  for (int t = 1; t <= 5; ++t) got.push_back(demand_at(s, t));
  EXPECT_EQ(got, (std::vector<std::int64_t>{30, 47, 65, 82, 100}));
}

TEST(Demand, RampOracleOnManyShapes) {
  // Linear interpolation evaluated in exact integer arithmetic:
  // floor((3N(T-1) + 7N(t-1)) / (10(T-1))).
  for (std::int64_t n = 1; n <= 60; n += 7)
    for (int T = 2; T <= 9; ++T) {
      DemandSchedule s{ScheduleKind::ramp, n, T, 0.3, {}};
      for (int t = 1; t <= T; ++t) {
        const std::int64_t num = 3 * n * (T - 1) + 7 * n * (t - 1);
        EXPECT_EQ(demand_at(s, t), num / (10 * (T - 1))) << n << ' ' << T << ' ' << t;
      }
      EXPECT_EQ(demand_at(s, T), n);
    }
}

TEST(Demand, ConstantAndSingleIteration) {
  DemandSchedule s{ScheduleKind::constant, 40, 3, 0.3, {}};
  for (int t = 1; t <= 3; ++t) EXPECT_EQ(demand_at(s, t), 40);
  DemandSchedule one{ScheduleKind::ramp, 40, 1, 0.3, {}};
  EXPECT_EQ(demand_at(one, 1), 40);
}

TEST(Demand, ExplicitListAndRange) {
  DemandSchedule s{ScheduleKind::explicit_list, 0, 3, 0.3, {4, 6, 9}};
  EXPECT_EQ(demand_at(s, 2), 6);
  EXPECT_THROW(demand_at(s, 0), ConfigError);
  EXPECT_THROW(demand_at(s, 4), ConfigError);
  s.iterations = 4;
  EXPECT_THROW(demand_at(s, 4), ConfigError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.model.lost_symbols = c.model.known_symbols = 3;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.iterations = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.subset_fraction = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.subset_fraction = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.restarts = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_EQ(c.iterations, 10);
  EXPECT_DOUBLE_EQ(c.subset_fraction, 0.10);
  EXPECT_DOUBLE_EQ(c.gamma, 0.9);
  EXPECT_EQ(c.top_k, 5u);
}

TEST(Subset, KeepsNoncognateShare) {
  SynthSpec spec;
  spec.vocabulary_size = 1000;
  spec.unpaired_lost = 0.3;
  spec.unpaired_known = 0.2;
  auto c = synthesize(spec, 1);
  auto s = select_subset(c.lost.size(), c.known.size(), 0.1, 0, &c.gold, 9);
  std::size_t paired_lost = 0, paired_known = 0;
  std::vector<bool> kp(c.known.size(), false);
  for (auto [i, j] : c.gold.pairs()) kp[j] = true;
  for (auto i : s.lost) paired_lost += !c.gold.partners(i).empty();
  for (auto j : s.known) paired_known += kp[j];
  // Full corpus: 500 of 700 lost words and 500 of 800 known words are paired.
  EXPECT_NEAR(static_cast<double>(paired_lost) / s.lost.size(), 500.0 / 700.0, 0.02);
  EXPECT_NEAR(static_cast<double>(paired_known) / s.known.size(), 500.0 / 800.0, 0.02);
  EXPECT_NEAR(static_cast<double>(s.lost.size()), 70.0, 1.0);
  // Both halves of each sampled gold pair come along.
  std::size_t complete = 0;
  for (auto i : s.lost)
    for (auto j : c.gold.partners(i)) complete += std::binary_search(s.known.begin(), s.known.end(), j);
  EXPECT_EQ(complete, paired_lost);
}

TEST(Subset, FloorAndDeterminism) {
  auto full = select_subset(50, 60, 0.1, 200, nullptr, 1);
  EXPECT_EQ(full.lost.size(), 50u);
  EXPECT_EQ(full.known.size(), 60u);
  auto a = select_subset(5000, 4000, 0.1, 0, nullptr, 3), b = select_subset(5000, 4000, 0.1, 0, nullptr, 3);
  EXPECT_EQ(a.lost, b.lost);
  EXPECT_EQ(a.known, b.known);
  EXPECT_EQ(a.lost.size(), 500u);
  EXPECT_EQ(a.known.size(), 400u);
}

TEST(SelectRun, LowestObjectiveThenLowestSeed) {
  auto rec = [](std::uint64_t seed, double obj) {
    RunRecord r;
    r.seed = seed;
    IterationRecord it;
    it.objective = obj;
    r.iterations.push_back(it);
    return r;
  };
  EXPECT_EQ(select_run({rec(1, 5.0), rec(2, 3.0), rec(3, 4.0)}), 1u);
  EXPECT_EQ(select_run({rec(9, 3.0), rec(4, 3.0), rec(6, 3.0)}), 1u);
  EXPECT_THROW(select_run({}), ConfigError);
}

// Small end-to-end runs.

class TinyRun : public ::testing::Test {
 protected:
  SynthCorpus corpus;
  TrainConfig cfg;

  void SetUp() override {
    SynthSpec spec;
    spec.vocabulary_size = 24;
    spec.symbols = 6;
    spec.max_length = 5;
    corpus = synthesize(spec, 3);
    cfg.model.embedding_dim = cfg.model.hidden_dim = 8;
    cfg.model.universal_size = 6;
    cfg.model.samples = 4;
    cfg.model.max_decode_length = 8;
    cfg.iterations = 2;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.adam.learning_rate = 0.01;
    cfg.noiseless = true;
    cfg.seed = 5;
  }
};

TEST_F(TinyRun, OneEntryPerIteration) {
  cfg.iterations = 3;
  auto r = train<double>(corpus.lost, corpus.known, cfg, &corpus.gold);
  ASSERT_EQ(r.record.iterations.size(), 3u);
  for (int t = 0; t < 3; ++t) {
    const auto& it = r.record.iterations[static_cast<std::size_t>(t)];
    EXPECT_EQ(it.iteration, t + 1);
    EXPECT_EQ(it.loss_curve.size(), 3u);
    EXPECT_TRUE(it.accuracy.has_value());
    EXPECT_LE(it.demand_used, it.demand_requested);
  }
}

TEST_F(TinyRun, SingleIterationGammaZeroKeepsSolverAssignment) {
  cfg.iterations = 1;
  cfg.gamma = 0.0;
  cfg.cognates = 10;
  auto r = train<double>(corpus.lost, corpus.known, cfg);
  EXPECT_EQ(r.flow.background(), 0.0);
  const auto a = solve_mcf(make_network(r.costs, r.record.iterations[0].demand_used));
  ASSERT_EQ(r.flow.sparse().size(), a.pairs.size());
  for (const auto& [i, j] : a.pairs) EXPECT_EQ(r.flow.value(i, j), 1.0);
  EXPECT_EQ(r.record.iterations[0].flow_cost, a.total_cost);
}

TEST_F(TinyRun, IdenticalSeedsIdenticalRecords) {
  auto a = train<double>(corpus.lost, corpus.known, cfg, &corpus.gold);
  auto b = train<double>(corpus.lost, corpus.known, cfg, &corpus.gold);
  auto strip = [](RunRecord r) {
    for (auto& it : r.iterations) it.seconds = 0.0;
    return run_record_json(r).dump();
  };
  EXPECT_EQ(strip(a.record), strip(b.record));
  EXPECT_TRUE(a.flow == b.flow);
  EXPECT_TRUE(a.params == b.params);
  auto c = cfg;
  c.threads = 3;
  auto t3 = train<double>(corpus.lost, corpus.known, c, &corpus.gold);
  EXPECT_EQ(strip(a.record), strip(t3.record));
}

TEST_F(TinyRun, ParametersResetEveryIteration) {
  std::vector<ModelParams<double>> starts;
  TrainHooks<double> hooks;
  hooks.on_init = [&](int, const ModelParams<double>& p) { starts.push_back(p); };
  auto r = train<double>(corpus.lost, corpus.known, cfg, nullptr, hooks);
  ASSERT_EQ(starts.size(), 2u);
  auto resolved = resolve_config(cfg, corpus.lost, corpus.known);
  for (int t = 1; t <= 2; ++t)
    EXPECT_TRUE(starts[static_cast<std::size_t>(t - 1)] ==
                init_params<double>(resolved.model, iteration_param_seed(cfg.seed, t)));
  // The trained parameters of iteration 1 are not what iteration 2 starts from.
  auto one = cfg;
  one.iterations = 1;
  auto first = train<double>(corpus.lost, corpus.known, one);
  EXPECT_FALSE(first.params == starts[1]);
  EXPECT_FALSE(r.params == starts[1]);
}

TEST_F(TinyRun, InfeasibleDemandIsLoweredWithWarning) {
  cfg.iterations = 1;
  cfg.schedule.kind = ScheduleKind::explicit_list;
  cfg.schedule.values = {static_cast<std::int64_t>(corpus.lost.size()) + 5};
  cfg.schedule_from_config = true;
  auto r = train<double>(corpus.lost, corpus.known, cfg);
  ASSERT_EQ(r.record.warnings.size(), 1u);
  EXPECT_LT(r.record.iterations[0].demand_used, r.record.iterations[0].demand_requested);
  EXPECT_EQ(r.record.iterations[0].demand_used, max_feasible_flow(make_network(r.costs, 0)));
}

TEST_F(TinyRun, WithoutFlowKeepsUniformState) {
  cfg.use_flow = false;
  cfg.iterations = 4;
  auto r = train<double>(corpus.lost, corpus.known, cfg, &corpus.gold);
  EXPECT_EQ(r.record.iterations.size(), 1u);
  EXPECT_TRUE(r.flow.sparse().empty());
  EXPECT_EQ(r.pairs.size(), corpus.lost.size());
  for (const auto& p : r.pairs) EXPECT_EQ(p.known, r.costs.candidates(p.lost).front().known);
}

TEST_F(TinyRun, SingleRestartEqualsTrain) {
  auto a = multi_restart<double>(corpus.lost, corpus.known, cfg);
  auto b = train<double>(corpus.lost, corpus.known, cfg);
  EXPECT_TRUE(a.flow == b.flow);
  EXPECT_EQ(a.record.objective(), b.record.objective());
}

TEST_F(TinyRun, ScreenedRestartMatchesSurvivorAlone) {
  cfg.iterations = 3;
  cfg.restarts = 3;
  cfg.restart_screen = 1;
  auto r = multi_restart<double>(corpus.lost, corpus.known, cfg);
  ASSERT_EQ(r.record.iterations.size(), 3u);

  // The survivor has the lowest first-iteration objective.
  double best = 0.0;
  std::uint64_t best_seed = 0;
  for (int k = 0; k < 3; ++k) {
    auto one = cfg;
    one.seed = cfg.seed + static_cast<std::uint64_t>(k);
    one.iterations = 1;
    const double obj = train<double>(corpus.lost, corpus.known, one).record.objective();
    if (k == 0 || obj < best) best = obj, best_seed = one.seed;
  }
  EXPECT_EQ(r.record.seed, best_seed);

  auto alone = cfg;
  alone.seed = r.record.seed;
  auto b = train<double>(corpus.lost, corpus.known, alone);
  EXPECT_TRUE(r.flow == b.flow);
  EXPECT_EQ(r.record.objective(), b.record.objective());
  ASSERT_EQ(r.pairs.size(), b.pairs.size());
  for (std::size_t k = 0; k < r.pairs.size(); ++k) EXPECT_EQ(r.pairs[k].known, b.pairs[k].known);

  cfg.threads = 3;
  auto threaded = multi_restart<double>(corpus.lost, corpus.known, cfg);
  EXPECT_TRUE(threaded.flow == r.flow);
}

TEST_F(TinyRun, SabotagedRestartLoses) {
  cfg.epochs = 25;
  cfg.iterations = 1;
  auto frozen = cfg;
  frozen.epochs = 0;  // parameters never leave their random init
  frozen.seed = 1;
  auto healthy = cfg;
  healthy.seed = 2;
  auto r = best_of<double>(corpus.lost, corpus.known, {frozen, healthy});
  EXPECT_EQ(r.record.seed, 2u);
}

TEST_F(TinyRun, EmptyVocabularyRejected) {
  Lexicon empty;
  EXPECT_THROW(train<double>(empty, corpus.known, cfg), ConfigError);
}

}  // namespace
}  // namespace decipher
