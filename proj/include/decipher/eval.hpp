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

// Cognate identification scoring.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "decipher/corpus.hpp"
#include "decipher/flow.hpp"

namespace decipher {

struct ScoredPair {
  std::size_t lost = 0;
  std::size_t known = 0;
  double weight = 0.0;
  bool correct = false;

  friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

struct EvalReport {
  double accuracy = 0.0;   // over lost words that have a gold partner
  double precision = 0.0;  // over emitted pairs; 0 when nothing was emitted
  bool precision_defined = false;
  std::size_t gold_words = 0;     // distinct lost words in gold
  std::size_t gold_pairs = 0;
  std::size_t emitted = 0;
  std::size_t correct_words = 0;  // gold lost words with a correct emitted partner
  std::size_t correct_pairs = 0;
  std::vector<ScoredPair> pairs;  // sorted by (lost, known, weight)

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// A lost word counts as correct when an emitted partner is among its gold
/// partners. Lost words without gold partners only affect precision.
inline EvalReport score(const std::vector<PredictedPair>& emitted, const GoldTable& gold) {
  EvalReport r;
  r.gold_pairs = gold.size();
  const auto gold_lost = gold.lost_words();
  r.gold_words = gold_lost.size();
  std::set<std::size_t> correct_lost;
  for (const auto& p : emitted) {
    const bool ok = gold.contains(p.lost, p.known);
    r.pairs.push_back({p.lost, p.known, p.weight, ok});
    if (ok) {
      ++r.correct_pairs;
      correct_lost.insert(p.lost);
    }
  }
  std::sort(r.pairs.begin(), r.pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
    return std::tie(a.lost, a.known, a.weight) < std::tie(b.lost, b.known, b.weight);
  });
  r.emitted = emitted.size();
  r.correct_words = correct_lost.size();
  r.accuracy = r.gold_words ? static_cast<double>(r.correct_words) / static_cast<double>(r.gold_words) : 0.0;
  r.precision_defined = r.emitted > 0;
  r.precision = r.precision_defined ? static_cast<double>(r.correct_pairs) / static_cast<double>(r.emitted) : 0.0;
  return r;
}

/// Pair listing with a correctness column.
inline void write_scored_pairs(const std::filesystem::path& path, const EvalReport& report, const Lexicon& lost,
                               const Lexicon& known) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.precision(9);
  for (const auto& p : report.pairs)
    out << lost.render(p.lost) << '\t' << known.render(p.known) << '\t' << p.weight << '\t'
        << (p.correct ? 1 : 0) << '\n';
}

}  // namespace decipher
