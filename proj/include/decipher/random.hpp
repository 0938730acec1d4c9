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

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace decipher {

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags,
/// so per-item streams do not depend on iteration or thread order.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix_seed(base);
  for (auto t : tags) s = mix_seed(s ^ mix_seed(t + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t base,
                    std::initializer_list<std::uint64_t> tags = {}) {
  return Rng(derive_seed(base, tags));
}

/// Uniform double in [0, 1) built from the raw engine output; identical
/// across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return k < n ? k : n - 1;
}

/// Draws an index with probability proportional to `weights[k]`.
template <typename Range>
std::size_t sample_discrete(Rng& rng, const Range& weights) {
  double total = 0.0;
  for (auto w : weights) total += static_cast<double>(w);
  double u = uniform01(rng) * total;
  std::size_t k = 0, last = 0;
  for (auto w : weights) {
    if (static_cast<double>(w) > 0.0) last = k;
    u -= static_cast<double>(w);
    if (u < 0.0) return k;
    ++k;
  }
  return last;
}

}  // namespace decipher
