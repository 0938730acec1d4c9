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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <vector>

#include "decipher/corpus.hpp"

namespace decipher {

/// Integer flow costs are expected edit distances scaled by this factor and
/// rounded to nearest.
inline constexpr double kCostScale = 1000.0;

inline std::int64_t scale_cost(double cost) {
  return static_cast<std::int64_t>(std::llround(cost * kCostScale));
}

struct Candidate {
  std::size_t known = 0;
  double cost = 0.0;
};

/// Sparse expected-edit-distance matrix. Each lost word keeps its k
/// cheapest known-word candidates, ordered by (cost, known index).
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t n_lost, std::size_t n_known, std::size_t k)
      : n_known_(n_known), k_(k), rows_(n_lost) {}

  std::size_t lost_count() const { return rows_.size(); }
  std::size_t known_count() const { return n_known_; }
  std::size_t k() const { return k_; }

  const std::vector<Candidate>& candidates(std::size_t lost) const { return rows_.at(lost); }

  /// Replaces the row for `lost` with the k cheapest entries of `all`.
  void set_row(std::size_t lost, std::vector<Candidate> all) {
    const auto keep = std::min(k_, all.size());
    auto less = [](const Candidate& a, const Candidate& b) {
      return a.cost < b.cost || (a.cost == b.cost && a.known < b.known);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), less);
    all.resize(keep);
    rows_.at(lost) = std::move(all);
  }

  std::optional<double> lookup(std::size_t lost, std::size_t known) const {
    for (const auto& c : rows_.at(lost))
      if (c.known == known) return c.cost;
    return std::nullopt;
  }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

 private:
  std::size_t n_known_ = 0;
  std::size_t k_ = 0;
  std::vector<std::vector<Candidate>> rows_;
};

/// Diagnostic dump: lost word, known word, cost; by lost index then cost.
inline void write_cost_matrix(const std::filesystem::path& path, const CostMatrix& costs,
                              const Lexicon& lost, const Lexicon& known) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.precision(6);
  for (std::size_t i = 0; i < costs.lost_count(); ++i)
    for (const auto& c : costs.candidates(i))
      out << lost.render(i) << '\t' << known.render(c.known) << '\t' << c.cost << '\n';
}

}  // namespace decipher
