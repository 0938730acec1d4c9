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

#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "decipher/flow.hpp"
#include "decipher/oracle.hpp"

namespace decipher {
namespace {

FlowNetwork dense(const std::vector<std::vector<std::int64_t>>& costs, std::int64_t demand, std::int64_t cap = 1) {
  FlowNetwork net;
  net.lost_count = costs.size();
  net.known_count = costs.empty() ? 0 : costs[0].size();
  net.known_capacity = cap;
  net.demand = demand;
  for (std::size_t i = 0; i < costs.size(); ++i)
    for (std::size_t j = 0; j < costs[i].size(); ++j) net.edges.push_back({i, j, costs[i][j]});
  return net;
}

// Checks capacity, conservation and demand, and that total_cost is the sum of
// the used edges' costs.
void expect_valid(const FlowNetwork& net, const FlowAssignment& a) {
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> cheapest;
  for (const auto& e : net.edges) {
    auto [it, fresh] = cheapest.emplace(std::make_pair(e.lost, e.known), e.cost);
    if (!fresh) it->second = std::min(it->second, e.cost);
  }
  std::vector<int> out(net.lost_count, 0), in(net.known_count, 0);
  std::int64_t cost = 0;
  for (const auto& [i, j] : a.pairs) {
    ASSERT_TRUE(cheapest.count({i, j}));
    cost += cheapest[{i, j}];
    ++out[i];
    ++in[j];
  }
  for (int v : out) EXPECT_LE(v, 1);
  for (int v : in) EXPECT_LE(v, net.known_capacity);
  EXPECT_EQ(static_cast<std::int64_t>(a.pairs.size()), net.demand);
  EXPECT_EQ(a.flow, net.demand);
  EXPECT_EQ(a.total_cost, cost);
}

TEST(Solver, SingleEdge) {
  auto a = solve_mcf(dense({{7}}, 1));
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.total_cost, 7);
}

TEST(Solver, DiagonalAssignment) {
  auto a = solve_mcf(dense({{0, 5}, {5, 0}}, 2));
  EXPECT_EQ(a.total_cost, 0);
  EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
}

TEST(Solver, ZeroDemand) {
  auto a = solve_mcf(dense({{3, 4}}, 0));
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.total_cost, 0);
}

TEST(Solver, NeedsRerouting) {
  // Greedy picks (0,0) first; the optimum for D=2 must reroute.
  auto a = solve_mcf(dense({{1, 2}, {1, 100}}, 2));
  EXPECT_EQ(a.total_cost, 3);
}

TEST(Solver, InfeasibleReportsMaxFlow) {
  FlowNetwork net = dense({{1, 1}, {1, 1}, {1, 1}}, 3);
  try {
    solve_mcf(net);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.max_feasible_flow(), 2);
  }
  EXPECT_EQ(max_feasible_flow(net), 2);
  net.known_capacity = 3;
  expect_valid(net, solve_mcf(net));
}

TEST(Solver, RelaxedCapacityAllowsThreePerKnown) {
  auto net = dense({{1}, {1}, {1}, {1}}, 3, 3);
  auto a = solve_mcf(net);
  expect_valid(net, a);
  EXPECT_EQ(a.pairs.size(), 3u);
  net.demand = 4;
  EXPECT_THROW(solve_mcf(net), SolverError);
}

TEST(Solver, RejectsBadNetworks) {
  auto net = dense({{1}}, 1);
  net.edges.push_back({0, 5, 1});
  EXPECT_THROW(solve_mcf(net), ConfigError);
  net = dense({{-1}}, 1);
  EXPECT_THROW(solve_mcf(net), ConfigError);
}

TEST(Solver, MatchesBruteForce) {
  Rng rng = make_rng(404, {});
  int feasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t cap = trial % 4 == 0 ? 2 : 1;
    auto net = oracle::random_network(rng, 5, 4, 20, cap);
    const auto expected = oracle::brute_force_min_cost(net);
    if (!expected) {
      EXPECT_THROW(solve_mcf(net), SolverError) << "trial " << trial;
      continue;
    }
    ++feasible;
    auto a = solve_mcf(net);
    EXPECT_EQ(a.total_cost, *expected) << "trial " << trial;
    expect_valid(net, a);
  }
  EXPECT_GT(feasible, 100);
}

TEST(Solver, MaxFeasibleMatchesBruteForce) {
  Rng rng = make_rng(405, {});
  for (int trial = 0; trial < 100; ++trial) {
    auto net = oracle::random_network(rng, 5, 5, 20);
    std::int64_t best = 0;
    for (std::int64_t d = 0; d <= static_cast<std::int64_t>(net.lost_count); ++d) {
      auto probe = net;
      probe.demand = d;
      if (oracle::brute_force_min_cost(probe)) best = d;
    }
    EXPECT_EQ(max_feasible_flow(net), best) << "trial " << trial;
  }
}

TEST(Network, FromCostMatrixScalesCosts) {
  CostMatrix costs(2, 3, 2);
  costs.set_row(0, {{0, 1.25}, {1, 0.5}, {2, 3.0}});
  costs.set_row(1, {{2, 0.0004}});
  auto net = make_network(costs, 2);
  ASSERT_EQ(net.edges.size(), 3u);
  EXPECT_EQ(net.edges[0].known, 1u);
  EXPECT_EQ(net.edges[0].cost, 500);
  EXPECT_EQ(net.edges[1].cost, 1250);
  EXPECT_EQ(net.edges[2].cost, 0);
}

// Flow state

TEST(FlowState, InitValues) {
  EXPECT_DOUBLE_EQ(init_flow(100, 100, 100).value(3, 7), 0.01);
  EXPECT_DOUBLE_EQ(init_flow(3, 4, 12).value(2, 3), 1.0);
  auto f = init_flow(1, 2, 1);
  EXPECT_DOUBLE_EQ(f.value(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(f.value(0, 1), 0.5);
  EXPECT_THROW(init_flow(2, 2, 0), ConfigError);
  EXPECT_THROW(init_flow(2, 2, 5), ConfigError);
}

TEST(FlowState, DecayArithmetic) {
  auto prev = init_flow(2, 2, 4);  // all ones
  FlowAssignment raw;
  raw.pairs = {{0, 1}};
  auto next = decay_flow(prev, raw, 0.9);
  EXPECT_DOUBLE_EQ(next.value(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(next.value(0, 1), 1.0);
  EXPECT_THROW(decay_flow(prev, raw, 1.0), ConfigError);
  EXPECT_THROW(decay_flow(prev, raw, -0.1), ConfigError);
}

TEST(FlowState, GammaZeroReturnsRaw) {
  auto prev = init_flow(3, 3, 2);
  FlowAssignment raw;
  raw.pairs = {{0, 2}, {1, 0}};
  auto next = decay_flow(prev, raw, 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const bool on = (i == 0 && j == 2) || (i == 1 && j == 0);
      EXPECT_DOUBLE_EQ(next.value(i, j), on ? 1.0 : 0.0);
    }
}

TEST(FlowState, DecayStaysInUnitInterval) {
  Rng rng = make_rng(77, {});
  for (int trial = 0; trial < 50; ++trial) {
    auto f = init_flow(4, 4, 1 + static_cast<double>(uniform_index(rng, 16)));
    for (int step = 0; step < 6; ++step) {
      auto net = oracle::random_network(rng, 4, 3, 9);
      net.lost_count = net.known_count = 4;
      net.demand = std::min<std::int64_t>(net.demand, max_feasible_flow(net));
      f = decay_flow(f, solve_mcf(net), uniform01(rng) * 0.99);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
          EXPECT_GE(f.value(i, j), 0.0);
          EXPECT_LE(f.value(i, j), 1.0 + 1e-12);
        }
    }
  }
}

TEST(Extract, OneHotState) {
  auto f = init_flow(3, 3, 1);
  FlowAssignment raw;
  raw.pairs = {{0, 2}, {2, 1}};
  f = decay_flow(f, raw, 0.0);
  auto pairs = extract_pairs(f);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].lost, 0u);
  EXPECT_EQ(pairs[0].known, 2u);
  EXPECT_DOUBLE_EQ(pairs[0].weight, 1.0);
  EXPECT_EQ(pairs[1].lost, 2u);
  EXPECT_EQ(pairs[1].known, 1u);
}

TEST(Extract, UniformStateUsesCosts) {
  auto f = init_flow(2, 3, 1);
  CostMatrix costs(2, 3, 3);
  costs.set_row(0, {{0, 2.0}, {1, 1.0}, {2, 1.0}});
  costs.set_row(1, {{0, 0.5}, {2, 4.0}});
  auto pairs = extract_pairs(f, &costs);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].known, 1u);  // cost tie with 2 broken by index
  EXPECT_EQ(pairs[1].known, 0u);
  auto bare = extract_pairs(f);
  EXPECT_EQ(bare[0].known, 0u);
}

TEST(Extract, ValueTieBrokenByCost) {
  auto f = init_flow(1, 3, 1);
  f.set_sparse(0, 0, 0.2);
  f.set_sparse(0, 2, 0.2);
  CostMatrix costs(1, 3, 3);
  costs.set_row(0, {{0, 3.0}, {2, 1.0}});
  EXPECT_EQ(extract_pairs(f, &costs)[0].known, 2u);
  EXPECT_EQ(extract_pairs(f)[0].known, 0u);
}

TEST(Assignment, WriteLoadRoundTrip) {
  auto lost = parse_vocabulary("ab\ncd\n", WordFormat::plain).lexicon;
  auto known = parse_vocabulary("xy\nzw\n", WordFormat::plain, Language::known).lexicon;
  std::vector<PredictedPair> pairs{{0, 1, 0.75}, {1, 0, 0.125}};
  auto path = std::filesystem::temp_directory_path() / "decipher_flow_assignment.tsv";
  write_assignment(path, pairs, lost, known);
  auto back = load_assignment(path, lost, known);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].known, 1u);
  EXPECT_DOUBLE_EQ(back[1].weight, 0.125);
}

}  // namespace
}  // namespace decipher
