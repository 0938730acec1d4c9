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

// Acceptance gates. Prints one PASS/FAIL line per criterion and exits
// nonzero if any failed. `--quick` skips the end-to-end training runs.

#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "decipher/cost.hpp"
#include "decipher/eval.hpp"
#include "decipher/oracle.hpp"
#include "decipher/selftest.hpp"
#include "decipher/trainer.hpp"

namespace decipher {
namespace {

using Clock = std::chrono::steady_clock;

struct Gate {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Gate()>& check) {
  const auto t0 = Clock::now();
  Gate g;
  try {
    g = check();
  } catch (const std::exception& e) {
    g = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!g.passed) ++failures;
  std::cout << (g.passed ? "PASS " : "FAIL ") << name << ": " << g.detail << " [" << std::fixed
            << std::setprecision(1) << secs << "s]" << std::endl;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Gate regularizer_invariants() {
  Rng rng = make_rng(8128, {});
  int bad = 0;
  for (int trace = 0; trace < 1000; ++trace) {
    const std::size_t n = 3 + uniform_index(rng, 12);
    const double start = static_cast<double>(uniform_index(rng, 8)) / 4.0;  // exact in binary
    std::vector<double> mono(n), twos(n);
    for (std::size_t t = 0; t < n; ++t) {
      mono[t] = start + static_cast<double>(t);
      twos[t] = start + static_cast<double>(t / 2);
    }
    if (regularizer(mono, Regularizer::omega1) != 0.0) ++bad;
    if (regularizer(twos, Regularizer::omega2) != 0.0) ++bad;
    // One stall or skip somewhere after the first step.
    const std::size_t at = 1 + uniform_index(rng, n - 1);
    const double shift = uniform_index(rng, 2) ? 1.0 : -1.0;
    auto m = mono, w = twos;
    for (std::size_t t = at; t < n; ++t) {
      m[t] += shift;
      w[t] += shift;
    }
    if (!(regularizer(m, Regularizer::omega1) > 0.0)) ++bad;
    if (!(regularizer(w, Regularizer::omega2) > 0.0)) ++bad;
  }
  return {bad == 0, "1000 traces, " + std::to_string(bad) + " violations"};
}

Gate edit_distance_metric() {
  Rng rng = make_rng(1729, {});
  auto word = [&] {
    Word w(uniform_index(rng, 8));
    for (auto& s : w) s = static_cast<int>(uniform_index(rng, 4));
    return w;
  };
  int bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const Word a = word(), b = word(), c = word();
    const auto ab = edit_distance(a, b), ba = edit_distance(b, a);
    const auto bc = edit_distance(b, c), ac = edit_distance(a, c);
    const auto la = static_cast<std::int64_t>(a.size()), lb = static_cast<std::int64_t>(b.size());
    if (ab != ba || ac > ab + bc || ab < std::abs(la - lb) || ab > std::max(la, lb) || (ab == 0) != (a == b)) ++bad;
  }
  const auto fast = edit_distance(std::string("kitten"), std::string("sitting"));
  const Word kitten{0, 1, 2, 2, 3, 4}, sitting{5, 1, 2, 2, 1, 4, 6};
  const auto slow = oracle::edit_distance_by_search(kitten, sitting, 4);
  std::ostringstream d;
  d << "10000 triples, " << bad << " violations; kitten/sitting " << fast << " (search " << slow << ")";
  return {bad == 0 && fast == 3 && slow == 3, d.str()};
}

Gate monte_carlo() {
  ModelConfig cfg;
  cfg.embedding_dim = cfg.hidden_dim = 4;
  cfg.universal_size = 5;
  cfg.lost_symbols = cfg.known_symbols = 2;
  cfg.max_decode_length = 2;
  auto p = init_params<double>(cfg, 31);
  p.for_each([](std::string_view, MatrixT<double>& m) { m *= 8.0; });
  const Word x{0, 1};
  const auto exact = oracle::enumerate_outputs(p, cfg, x);
  double worst = 0.0;
  for (const Word& target : {Word{0, 1}, Word{1}, Word{1, 1, 0}, Word{}}) {
    double expect = 0.0;
    for (const auto& e : exact) expect += e.prob * static_cast<double>(edit_distance(e.word, target));
    worst = std::max(worst, std::abs(expected_edit_distance(p, cfg, x, target, 1000, 17, false) - expect));
  }
  std::ostringstream d;
  d << exact.size() << " enumerated outputs, worst |MC - exact| = " << worst;
  return {worst <= 0.05, d.str()};
}

struct EndToEnd {
  double accuracy = 0.0;
  double seconds = 0.0;
  std::string pairs_tsv;
  RunRecord record;
};

EndToEnd run(const SynthSpec& spec, std::uint64_t corpus_seed, TrainConfig cfg) {
  const auto corpus = synthesize(spec, corpus_seed);
  const auto t0 = Clock::now();
  auto result = multi_restart<double>(corpus.lost, corpus.known, cfg, nullptr);
  EndToEnd out;
  out.seconds = seconds_since(t0);
  out.accuracy = score(result.pairs, corpus.gold).accuracy;
  out.record = result.record;
  const auto path = std::filesystem::temp_directory_path() / "decipher_acceptance_pairs.tsv";
  write_assignment(path, result.pairs, corpus.lost, corpus.known);
  out.pairs_tsv = detail::read_file(path);
  std::filesystem::remove(path);
  return out;
}

std::string describe(const EndToEnd& r) {
  std::ostringstream d;
  d << std::fixed << std::setprecision(3) << "accuracy " << r.accuracy << " in " << std::setprecision(0) << r.seconds
    << "s, kept seed " << r.record.seed;
  return d.str();
}

SynthSpec noisy_spec() {
  SynthSpec s;
  s.unpaired_lost = s.unpaired_known = 0.3;
  s.insertion_rate = s.deletion_rate = 0.05;
  return s;
}

}  // namespace
}  // namespace decipher

int main(int argc, char** argv) {
  using namespace decipher;
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;

  report("gradient oracle (20 tiny models, rel. err <= 1e-3, < 2 min)", [] {
    auto r = gradient_suite();
    return Gate{r.passed && r.seconds < 120.0, r.detail};
  });
  report("flow oracle (200 instances, exact cost, < 1 min)", [] {
    auto r = flow_suite();
    return Gate{r.passed && r.seconds < 60.0, r.detail};
  });
  report("regularizer invariants", regularizer_invariants);
  report("edit-distance metric", edit_distance_metric);
  report("Monte Carlo expectation within 0.05 at M=1000", monte_carlo);
  if (quick) {
    std::cout << "end-to-end gates skipped (--quick)" << std::endl;
    return failures ? 1 : 0;
  }

  // Every end-to-end run uses the desk preset, the same settings `train` uses
  // by default. A single run on the noisy and syllabic corpora still lands in
  // a source-blind decoder for roughly one seed in four, so those gates take
  // three screened restarts, as `train --restarts 3` would.
  report("noiseless synthetic: accuracy >= 0.95, < 10 min", [] {
    TrainConfig cfg = desk_preset();
    cfg.noiseless = true;
    cfg.seed = 7;
    auto r = run(SynthSpec{}, 1, cfg);
    return Gate{r.accuracy >= 0.95 && r.seconds < 600.0, describe(r)};
  });

  EndToEnd noisy_full;
  report("noisy synthetic: accuracy >= 0.80, < 20 min", [&] {
    TrainConfig cfg = desk_preset();
    cfg.seed = 7;
    cfg.restarts = 3;
    noisy_full = run(noisy_spec(), 1, cfg);
    return Gate{noisy_full.accuracy >= 0.80 && noisy_full.seconds < 1200.0, describe(noisy_full)};
  });

  report("syllabic synthetic with second-order regularizer: accuracy >= 0.85", [] {
    SynthSpec spec;
    spec.syllabic = true;
    TrainConfig cfg = desk_preset();
    cfg.noiseless = true;
    cfg.model.regularizer = Regularizer::omega2;
    cfg.model.universal_size = 100;
    cfg.seed = 7;
    cfg.restarts = 3;
    auto r = run(spec, 1, cfg);
    return Gate{r.accuracy >= 0.85, describe(r)};
  });

  report("ablation: no flow drops noisy accuracy by >= 30 points", [&] {
    TrainConfig cfg = desk_preset();
    cfg.seed = 7;
    cfg.restarts = 3;
    cfg.use_flow = false;
    auto r = run(noisy_spec(), 1, cfg);
    std::ostringstream d;
    d << std::fixed << std::setprecision(3) << "full " << noisy_full.accuracy << ", no flow " << r.accuracy
      << ", drop " << noisy_full.accuracy - r.accuracy;
    return Gate{noisy_full.accuracy - r.accuracy >= 0.30, d.str()};
  });

  report("determinism: identical seeds give byte-identical assignments", [] {
    SynthSpec spec;
    spec.vocabulary_size = 60;
    spec.unpaired_lost = 0.2;
    TrainConfig cfg = desk_preset();
    cfg.iterations = 2;
    cfg.epochs = 10;
    cfg.seed = 11;
    cfg.threads = 1;
    const auto a = run(spec, 5, cfg);
    cfg.threads = 3;
    const auto b = run(spec, 5, cfg);
    const bool same = !a.pairs_tsv.empty() && a.pairs_tsv == b.pairs_tsv;
    return Gate{same, std::to_string(a.pairs_tsv.size()) + " bytes, " + (same ? "identical" : "different") +
                          " across 1 and 3 threads"};
  });

  std::cout << (failures ? std::to_string(failures) + " gate(s) failed" : std::string("all gates passed"))
            << std::endl;
  return failures ? 1 : 0;
}
