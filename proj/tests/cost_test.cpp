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

#include <algorithm>
#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

#include "decipher/cost.hpp"
#include "decipher/oracle.hpp"

namespace decipher {
namespace {

ModelConfig toy_config(int lost, int known, int max_len) {
  ModelConfig c;
  c.embedding_dim = c.hidden_dim = 4;
  c.universal_size = 5;
  c.lost_symbols = lost;
  c.known_symbols = known;
  c.max_decode_length = max_len;
  return c;
}

ModelParams<double> scaled(const ModelConfig& cfg, std::uint64_t seed, double scale) {
  auto p = init_params<double>(cfg, seed);
  p.for_each([&](std::string_view, MatrixT<double>& m) { m *= scale; });
  return p;
}

Word random_word(Rng& rng, int symbols, std::size_t max_len) {
  Word w(uniform_index(rng, max_len + 1));
  for (auto& s : w) s = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(symbols)));
  return w;
}

TEST(EditDistance, Examples) {
  EXPECT_EQ(edit_distance(std::string("abc"), std::string("abc")), 0);
  EXPECT_EQ(edit_distance(std::string(""), std::string("ab")), 2);
  EXPECT_EQ(edit_distance(std::string("kitten"), std::string("sitting")), 3);
}

TEST(EditDistance, KittenSittingMatchesScriptSearch) {
  const Word kitten{0, 1, 2, 2, 3, 4}, sitting{5, 1, 2, 2, 1, 4, 6};
  EXPECT_EQ(oracle::edit_distance_by_search(kitten, sitting, 3), 3);
  EXPECT_EQ(edit_distance(kitten, sitting), 3);
}

TEST(EditDistance, MatchesScriptSearchOnSmallWords) {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const auto a = random_word(rng, 3, 4), b = random_word(rng, 3, 4);
    EXPECT_EQ(edit_distance(a, b), oracle::edit_distance_by_search(a, b, 8));
  }
}

TEST(EditDistance, MetricProperties) {
  Rng rng = make_rng(6);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_word(rng, 4, 8), b = random_word(rng, 4, 8), c = random_word(rng, 4, 8);
    const int ab = edit_distance(a, b), ba = edit_distance(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_LE(edit_distance(a, c), ab + edit_distance(b, c));
    const auto la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
    EXPECT_GE(ab, std::abs(la - lb));
    EXPECT_LE(ab, std::max(la, lb));
  }
}

TEST(ExpectedDistance, MeanOfSamples) {
  const std::vector<Word> samples{{0, 1}, {0, 1}, {0, 2}, {0, 2}};
  EXPECT_DOUBLE_EQ(mean_edit_distance(samples, Word{0, 1}), 0.5);
}

TEST(ExpectedDistance, DeterministicModelEqualsGreedyDistance) {
  auto cfg = toy_config(3, 3, 4);
  auto p = init_params<double>(cfg, 3);
  p.out_bias(2, 0) = 300.0;  // always symbol 2, truncated at length 4
  const Word x{0, 1};
  EXPECT_DOUBLE_EQ(expected_edit_distance(p, cfg, x, Word{2, 2, 2, 2}, 10, 1), 0.0);
  const Word target{1, 2};
  const auto g = greedy_decode(p, cfg, x).word;
  EXPECT_DOUBLE_EQ(expected_edit_distance(p, cfg, x, target, 10, 1), edit_distance(g, target));
}

TEST(ExpectedDistance, NonnegativeAndSeedDeterministic) {
  const auto cfg = toy_config(3, 3, 6);
  const auto p = scaled(cfg, 4, 6.0);
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_word(rng, 3, 4);
    const auto y = random_word(rng, 3, 5);
    if (x.empty()) continue;
    const double a = expected_edit_distance(p, cfg, x, y, 10, 100 + trial);
    EXPECT_GE(a, 0.0);
    EXPECT_EQ(a, expected_edit_distance(p, cfg, x, y, 10, 100 + trial));
  }
}

TEST(ExpectedDistance, MonteCarloMatchesEnumeration) {
  auto cfg = toy_config(2, 2, 2);
  const auto p = scaled(cfg, 31, 8.0);
  const Word x{0, 1};
  const auto exact = oracle::enumerate_outputs(p, cfg, x);
  for (const Word& target : {Word{0, 1}, Word{1}, Word{1, 1, 0}}) {
    double expect = 0.0;
    for (const auto& e : exact) expect += e.prob * edit_distance(e.word, target);
    EXPECT_NEAR(expected_edit_distance(p, cfg, x, target, 1000, 17, false), expect, 0.05);
    EXPECT_NEAR(expected_edit_distance(p, cfg, x, target, 1000, 17, true), expect, 0.05);
  }
}

TEST(NearestKnown, PrunedTopKMatchesExhaustive) {
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Word> samples, known;
    for (int m = 0; m < 1 + static_cast<int>(uniform_index(rng, 6)); ++m) samples.push_back(random_word(rng, 4, 7));
    for (int j = 0; j < 30; ++j) known.push_back(random_word(rng, 4, 9));
    const std::size_t k = 1 + uniform_index(rng, 6);
    std::vector<Candidate> all;
    for (std::size_t j = 0; j < known.size(); ++j) all.push_back({j, mean_edit_distance(samples, known[j])});
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
      return a.cost < b.cost || (a.cost == b.cost && a.known < b.known);
    });
    CostMatrix m(1, known.size(), k);
    m.set_row(0, detail::nearest_known(samples, known, k));
    const auto& got = m.candidates(0);
    ASSERT_EQ(got.size(), k);
    for (std::size_t q = 0; q < k; ++q) {
      EXPECT_EQ(got[q].known, all[q].known) << "trial " << trial;
      EXPECT_DOUBLE_EQ(got[q].cost, all[q].cost);
    }
  }
}

class CostMatrixFixture : public ::testing::Test {
 protected:
  ModelConfig cfg = toy_config(4, 4, 8);
  ModelParams<double> p = scaled(cfg, 12, 5.0);
  std::vector<Word> lost, known;

  void SetUp() override {
    Rng rng = make_rng(13);
    for (int i = 0; i < 12; ++i) lost.push_back(random_word(rng, 4, 5));
    for (auto& w : lost)
      if (w.empty()) w.push_back(0);
    for (int j = 0; j < 9; ++j) known.push_back(random_word(rng, 4, 6));
  }
};

TEST_F(CostMatrixFixture, DenseWhenKCoversVocabulary) {
  CostOptions opt;
  opt.top_k = 20;
  auto m = build_cost_matrix(p, cfg, lost, known, opt, 1);
  EXPECT_EQ(m.entry_count(), lost.size() * known.size());
  for (std::size_t i = 0; i < lost.size(); ++i)
    for (const auto& c : m.candidates(i)) {
      EXPECT_GE(c.cost, 0.0);
      EXPECT_TRUE(std::isfinite(c.cost));
    }
}

TEST_F(CostMatrixFixture, KOneGivesOneCandidate) {
  CostOptions opt;
  opt.top_k = 1;
  auto m = build_cost_matrix(p, cfg, lost, known, opt, 1);
  for (std::size_t i = 0; i < lost.size(); ++i) EXPECT_EQ(m.candidates(i).size(), 1u);
}

TEST_F(CostMatrixFixture, RowsSortedAndBoundedByK) {
  auto m = build_cost_matrix(p, cfg, lost, known, CostOptions{}, 2);
  for (std::size_t i = 0; i < lost.size(); ++i) {
    const auto& row = m.candidates(i);
    EXPECT_LE(row.size(), 5u);
    for (std::size_t q = 1; q < row.size(); ++q)
      EXPECT_TRUE(row[q - 1].cost < row[q].cost || (row[q - 1].cost == row[q].cost && row[q - 1].known < row[q].known));
  }
}

TEST_F(CostMatrixFixture, SharedSamplesMatchPerPairEstimate) {
  CostOptions opt;
  opt.top_k = 20;
  const std::uint64_t seed = 3;
  auto m = build_cost_matrix(p, cfg, lost, known, opt, seed);
  for (std::size_t i = 0; i < lost.size(); ++i)
    for (std::size_t j = 0; j < known.size(); ++j)
      EXPECT_DOUBLE_EQ(*m.lookup(i, j),
                       expected_edit_distance(p, cfg, lost[i], known[j], opt.samples, derive_seed(seed, {i})));
}

TEST_F(CostMatrixFixture, ThreadCountDoesNotChangeResult) {
  CostOptions one, four;
  four.threads = 4;
  auto a = build_cost_matrix(p, cfg, lost, known, one, 5);
  auto b = build_cost_matrix(p, cfg, lost, known, four, 5);
  for (std::size_t i = 0; i < lost.size(); ++i) {
    ASSERT_EQ(a.candidates(i).size(), b.candidates(i).size());
    for (std::size_t q = 0; q < a.candidates(i).size(); ++q) {
      EXPECT_EQ(a.candidates(i)[q].known, b.candidates(i)[q].known);
      EXPECT_EQ(a.candidates(i)[q].cost, b.candidates(i)[q].cost);
    }
  }
}

TEST_F(CostMatrixFixture, RejectsEmptyInputs) {
  std::vector<Word> none;
  EXPECT_THROW(build_cost_matrix(p, cfg, none, known, CostOptions{}, 1), ConfigError);
  CostOptions opt;
  opt.top_k = 0;
  EXPECT_THROW(build_cost_matrix(p, cfg, lost, known, opt, 1), ConfigError);
}

TEST(CostScaling, RoundsToThousandths) {
  EXPECT_EQ(scale_cost(1.2344), 1234);
  EXPECT_EQ(scale_cost(1.2346), 1235);
  EXPECT_EQ(scale_cost(0.0), 0);
}

}  // namespace
}  // namespace decipher
