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

// Oracle suites shared by the `selftest` command and the acceptance binary.

#pragma once

#include <chrono>
#include <sstream>
#include <string>

#include "decipher/flow.hpp"
#include "decipher/oracle.hpp"
#include "decipher/seq2seq.hpp"

namespace decipher {

struct SuiteResult {
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Analytic gradients of random tiny models against central differences.
inline SuiteResult gradient_suite(int models = 20, double tolerance = 1e-3, std::uint64_t seed = 2718) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(seed, {});
  double worst = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (int m = 0; m < models; ++m) {
    ModelConfig cfg;
    cfg.embedding_dim = cfg.hidden_dim = 4;
    cfg.universal_size = 5;
    cfg.lost_symbols = 2 + static_cast<int>(uniform_index(rng, 3));
    cfg.known_symbols = 2 + static_cast<int>(uniform_index(rng, 3));
    cfg.regularizer = m % 2 ? Regularizer::omega2 : Regularizer::omega1;
    cfg.max_decode_length = 8;
    auto params = init_params<double>(cfg, derive_seed(seed, {static_cast<std::uint64_t>(m)}));
    // Larger weights than the training init so every nonlinearity is exercised.
    params.for_each([](std::string_view, MatrixT<double>& t) { t *= 4.0; });
    auto word = [&](int symbols) {
      Word w(1 + uniform_index(rng, 5));
      for (auto& s : w) s = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(symbols)));
      return w;
    };
    std::vector<Word> lost, known;
    for (int k = 0; k < 2; ++k) lost.push_back(word(cfg.lost_symbols));
    for (int k = 0; k < 2; ++k) known.push_back(word(cfg.known_symbols));
    std::vector<WeightedPair> pairs;
    for (std::size_t i = 0; i < lost.size(); ++i)
      for (std::size_t j = 0; j < known.size(); ++j) pairs.push_back({i, j, 0.05 + uniform01(rng)});
    const auto g = gradients(params, cfg, lost, known, pairs);
    const auto res = oracle::check_gradient(params, g.grad, [&](const ModelParams<double>& q) {
      return loss(q, cfg, lost, known, pairs).total;
    });
    entries += res.entries;
    if (res.worst_relative > worst) {
      worst = res.worst_relative;
      where = "model " + std::to_string(m) + " " + res.worst_tensor;
    }
  }
  SuiteResult out;
  out.passed = worst <= tolerance;
  std::ostringstream msg;
  msg << models << " models, " << entries << " entries, worst relative error " << worst;
  if (!where.empty()) msg << " at " << where;
  out.detail = msg.str();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Solver cost against exhaustive enumeration on random small networks.
inline SuiteResult flow_suite(int instances = 200, std::uint64_t seed = 31415) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(seed, {});
  int mismatches = 0, feasible = 0;
  std::string first;
  for (int k = 0; k < instances; ++k) {
    auto net = oracle::random_network(rng, 6, 4, 20);
    const auto expected = oracle::brute_force_min_cost(net);
    std::optional<std::int64_t> got;
    try {
      got = solve_mcf(net).total_cost;
    } catch (const SolverError&) {
    }
    if (expected) ++feasible;
    if (expected != got) {
      ++mismatches;
      if (first.empty()) first = "instance " + std::to_string(k);
    }
  }
  SuiteResult out;
  out.passed = mismatches == 0;
  std::ostringstream msg;
  msg << instances << " instances (" << feasible << " feasible), " << mismatches << " mismatches";
  if (!first.empty()) msg << ", first at " << first;
  out.detail = msg.str();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace decipher
