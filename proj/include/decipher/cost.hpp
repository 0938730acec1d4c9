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

// Edit distances and the Monte-Carlo expected edit distance used as the
// flow edge cost.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <vector>

#include "decipher/cost_matrix.hpp"
#include "decipher/parallel.hpp"
#include "decipher/random.hpp"
#include "decipher/seq2seq.hpp"

namespace decipher {

/// Levenshtein distance with unit insert, delete and substitute costs.
template <typename A, typename B>
int edit_distance(const A& a, const B& b) {
  const auto n = static_cast<std::size_t>(std::size(a)), m = static_cast<std::size_t>(std::size(b));
  if (n == 0) return static_cast<int>(m);
  if (m == 0) return static_cast<int>(n);
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  auto ai = std::begin(a);
  for (std::size_t i = 1; i <= n; ++i, ++ai) {
    cur[0] = static_cast<int>(i);
    auto bj = std::begin(b);
    for (std::size_t j = 1; j <= m; ++j, ++bj) {
      const int sub = prev[j - 1] + (*ai == *bj ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Decoder outputs standing in for Pr(. | x): M ancestral samples plus,
/// optionally, the greedy decode as one extra pseudo-sample.
template <typename Scalar>
std::vector<Word> draw_samples(const Seq2Seq<Scalar>& model, const Word& x, int count, std::uint64_t seed,
                               bool with_greedy = true) {
  if (count < 1) throw ConfigError("sample count must be at least 1");
  const auto src = model.encode(x);
  Rng rng = make_rng(seed, {0x5a3b});
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  for (int m = 0; m < count; ++m) out.push_back(model.generate(src, &rng).word);
  if (with_greedy) out.push_back(model.generate(src, nullptr).word);
  return out;
}

/// Mean edit distance from a sample set to `target`.
inline double mean_edit_distance(std::span<const Word> samples, const Word& target) {
  if (samples.empty()) return 0.0;
  long total = 0;
  for (const auto& s : samples) total += edit_distance(s, target);
  return static_cast<double>(total) / static_cast<double>(samples.size());
}

/// E_{y ~ Pr(.|x)} d(y, target), estimated from `count` samples (plus the
/// greedy pseudo-sample). Deterministic in `seed`.
template <typename Scalar>
double expected_edit_distance(const ModelParams<Scalar>& params, const ModelConfig& config, const Word& x,
                              const Word& target, int count, std::uint64_t seed, bool with_greedy = true) {
  const Seq2Seq<Scalar> model(params, config);
  const auto samples = draw_samples(model, x, count, seed, with_greedy);
  return mean_edit_distance(samples, target);
}

namespace detail {

/// Top-k known words by mean distance to `samples`. Candidates whose
/// length-difference lower bound cannot beat the current k-th best are
/// skipped, which leaves the result exact.
inline std::vector<Candidate> nearest_known(std::span<const Word> samples, std::span<const Word> known,
                                            std::size_t k) {
  const double denom = static_cast<double>(samples.size());
  std::vector<Candidate> all;
  if (k >= known.size()) {
    all.reserve(known.size());
    for (std::size_t j = 0; j < known.size(); ++j) all.push_back({j, mean_edit_distance(samples, known[j])});
    return all;
  }
  // Max-heap on (sum, index) of the k best so far.
  std::vector<std::pair<long, std::size_t>> heap;
  auto worse = [](const std::pair<long, std::size_t>& a, const std::pair<long, std::size_t>& b) { return a < b; };
  std::vector<long> lens;
  for (const auto& s : samples) lens.push_back(static_cast<long>(s.size()));
  for (std::size_t j = 0; j < known.size(); ++j) {
    const long ylen = static_cast<long>(known[j].size());
    long bound = 0;
    for (long l : lens) bound += std::labs(l - ylen);
    const bool full = heap.size() == k;
    const long limit = full ? heap.front().first : std::numeric_limits<long>::max();
    // Ties go to the lower index, which was seen first.
    if (full && bound >= limit) continue;
    long sum = 0;
    long remaining = bound;
    bool pruned = false;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      remaining -= std::labs(lens[s] - ylen);
      sum += edit_distance(samples[s], known[j]);
      if (full && sum + remaining >= limit) {
        pruned = true;
        break;
      }
    }
    if (pruned) continue;
    if (full) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.pop_back();
    }
    heap.emplace_back(sum, j);
    std::push_heap(heap.begin(), heap.end(), worse);
  }
  for (const auto& [sum, j] : heap) all.push_back({j, static_cast<double>(sum) / denom});
  return all;
}

}  // namespace detail

struct CostOptions {
  std::size_t top_k = 5;
  int samples = 10;
  bool with_greedy = true;
  int threads = 1;
};

/// Expected edit distance from every lost word to every known word, using
/// one sample set per lost word, keeping each lost word's k cheapest
/// candidates. Deterministic in `seed` for any thread count.
template <typename Scalar>
CostMatrix build_cost_matrix(const ModelParams<Scalar>& params, const ModelConfig& config,
                             std::span<const Word> lost, std::span<const Word> known, const CostOptions& opt,
                             std::uint64_t seed) {
  if (lost.empty() || known.empty()) throw ConfigError("cost matrix needs nonempty vocabularies");
  if (opt.top_k == 0) throw ConfigError("top-k must be positive");
  const Seq2Seq<Scalar> model(params, config);
  CostMatrix costs(lost.size(), known.size(), opt.top_k);
  parallel_for(lost.size(), opt.threads, [&](std::size_t i) {
    const auto samples = draw_samples(model, lost[i], opt.samples, derive_seed(seed, {i}), opt.with_greedy);
    costs.set_row(i, detail::nearest_known(samples, known, opt.top_k));
  });
  return costs;
}

}  // namespace decipher
