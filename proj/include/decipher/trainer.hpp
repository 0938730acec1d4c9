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

// Iterative training: alternate flow-weighted maximum-likelihood training of
// the cognate model with a minimum-cost flow assignment over expected edit
// distances, decaying the flow and re-initializing the model between
// iterations.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "decipher/adam.hpp"
#include "decipher/corpus.hpp"
#include "decipher/cost.hpp"
#include "decipher/error.hpp"
#include "decipher/eval.hpp"
#include "decipher/flow.hpp"
#include "decipher/parallel.hpp"
#include "decipher/random.hpp"
#include "decipher/seq2seq.hpp"

namespace decipher {

enum class ScheduleKind { constant, ramp, explicit_list };

/// Demand per iteration. `ramp` grows linearly from start_fraction * N to N.
struct DemandSchedule {
  ScheduleKind kind = ScheduleKind::ramp;
  std::int64_t cognates = 0;  // N
  int iterations = 1;         // T
  double start_fraction = 0.3;
  std::vector<std::int64_t> values;  // explicit_list only
};

inline std::int64_t demand_at(const DemandSchedule& s, int iteration) {
  if (iteration < 1 || iteration > s.iterations)
    throw ConfigError("iteration " + std::to_string(iteration) + " outside schedule range [1, " +
                      std::to_string(s.iterations) + "]");
  switch (s.kind) {
    case ScheduleKind::constant:
      return s.cognates;
    case ScheduleKind::explicit_list:
      if (static_cast<std::size_t>(iteration) > s.values.size())
        throw ConfigError("explicit demand schedule too short");
      return s.values[static_cast<std::size_t>(iteration - 1)];
    case ScheduleKind::ramp: {
      if (s.iterations == 1) return s.cognates;
      const double start = s.start_fraction * static_cast<double>(s.cognates);
      const double v = start + (static_cast<double>(s.cognates) - start) * (iteration - 1) / (s.iterations - 1);
      return static_cast<std::int64_t>(std::floor(v + 1e-9));
    }
  }
  return s.cognates;
}

struct TrainConfig {
  ModelConfig model;
  int iterations = 10;             // T
  std::int64_t cognates = 0;       // N; 0 picks min(|X|,|Y|) when noiseless, else ceil(|X|/2)
  bool noiseless = false;          // constant demand N instead of the ramp
  DemandSchedule schedule;         // kind/start_fraction/values; N and T filled in by train
  bool schedule_from_config = false;
  double gamma = 0.9;
  std::int64_t known_capacity = 1;
  std::size_t top_k = 5;
  double subset_fraction = 0.10;
  std::size_t min_subset_words = 200;  // floor on the training subset size
  int restarts = 1;
  int restart_screen = 0;          // iterations before all but the best restart stop; 0 runs all to the end
  int epochs = 30;
  std::size_t batch_size = 128;    // known words per optimizer step
  AdamConfig adam;
  bool lr_decay = false;           // linear decay to zero over each iteration's epochs
  bool use_flow = true;            // false: one pass on the uniform flow, no solver
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    model.validate();
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) throw ConfigError("subset fraction must lie in (0,1]");
    if (restarts < 1) throw ConfigError("restart count must be at least 1");
    if (restart_screen < 0) throw ConfigError("restart screen must be nonnegative");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0,1)");
    if (top_k < 1) throw ConfigError("top-k must be positive");
    if (epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (known_capacity < 1) throw ConfigError("known-side capacity must be positive");
    if (cognates < 0) throw ConfigError("cognate count must be nonnegative");
  }
};

/// Small-model settings that converge on a single core in minutes. The
/// struct defaults are the large sizes (250-dim LSTMs, batch 128,
/// lr 1e-3), which take hours per run on one core.
///
/// Small batches matter more than epochs here: with 8 known words per step
/// the first iteration on a noisy corpus usually settles into a decoder that
/// ignores its input, and later iterations never recover.
inline TrainConfig desk_preset() {
  TrainConfig c;
  c.model.embedding_dim = 32;
  c.model.hidden_dim = 32;
  c.iterations = 5;
  c.epochs = 40;
  c.batch_size = 4;
  c.adam.learning_rate = 0.02;
  c.lr_decay = true;
  c.restart_screen = 1;  // a collapsed run is already obvious after one iteration
  return c;
}

struct IterationRecord {
  int iteration = 0;
  std::vector<double> loss_curve;  // mean loss per known word, per epoch
  std::int64_t demand_requested = 0;
  std::int64_t demand_used = 0;
  std::int64_t flow_cost = 0;      // scaled integer solver cost
  double objective = 0.0;          // solver cost in edit-distance units
  std::optional<double> accuracy;  // when gold is available
  double seconds = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::int64_t cognates = 0;
  std::size_t subset_lost = 0;
  std::size_t subset_known = 0;
  std::vector<IterationRecord> iterations;
  std::vector<std::string> warnings;

  double objective() const { return iterations.empty() ? 0.0 : iterations.back().objective; }
};

template <typename Scalar = double>
struct TrainResult {
  FlowState flow;
  ModelParams<Scalar> params;  // model trained in the last iteration
  CostMatrix costs;            // cost matrix of the last iteration
  RunRecord record;
  std::vector<PredictedPair> pairs;
};

/// Hooks for logging and inspection.
template <typename Scalar = double>
struct TrainHooks {
  std::function<void(const std::string&)> log;
  /// Called with the freshly initialized parameters at the start of each
  /// iteration.
  std::function<void(int, const ModelParams<Scalar>&)> on_init;
};

inline std::uint64_t iteration_param_seed(std::uint64_t seed, int iteration) {
  return derive_seed(seed, {2, static_cast<std::uint64_t>(iteration)});
}

struct TrainingSubset {
  std::vector<std::size_t> lost;
  std::vector<std::size_t> known;
};

/// Picks the training subset. With gold available, cognate pairs and
/// unpaired words on each side are sampled at the same rate so the subset
/// keeps the corpus's noncognate percentage; without gold both sides are
/// sampled uniformly. Drawn once per run.
inline TrainingSubset select_subset(std::size_t n_lost, std::size_t n_known, double fraction,
                                    std::size_t min_words, const GoldTable* gold, std::uint64_t seed) {
  const double rate = std::min(1.0, std::max(fraction, static_cast<double>(min_words) /
                                                           static_cast<double>(std::max(n_lost, n_known))));
  TrainingSubset s;
  if (rate >= 1.0) {
    for (std::size_t i = 0; i < n_lost; ++i) s.lost.push_back(i);
    for (std::size_t j = 0; j < n_known; ++j) s.known.push_back(j);
    return s;
  }
  Rng rng = make_rng(seed, {1});
  auto take = [&](std::vector<std::size_t> pool) {
    detail::shuffle(pool, rng);
    pool.resize(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate * static_cast<double>(pool.size())))));
    return pool;
  };
  if (gold && !gold->empty()) {
    std::vector<bool> lost_paired(n_lost, false), known_paired(n_known, false);
    std::vector<std::size_t> pair_ids, lost_free, known_free;
    std::vector<std::pair<std::size_t, std::size_t>> first_pairs;
    for (const auto& [i, j] : gold->pairs()) {
      if (lost_paired[i] || known_paired[j]) continue;
      lost_paired[i] = known_paired[j] = true;
      first_pairs.emplace_back(i, j);
    }
    for (std::size_t k = 0; k < first_pairs.size(); ++k) pair_ids.push_back(k);
    for (std::size_t i = 0; i < n_lost; ++i)
      if (!lost_paired[i]) lost_free.push_back(i);
    for (std::size_t j = 0; j < n_known; ++j)
      if (!known_paired[j]) known_free.push_back(j);
    for (auto k : take(pair_ids)) {
      s.lost.push_back(first_pairs[k].first);
      s.known.push_back(first_pairs[k].second);
    }
    if (!lost_free.empty())
      for (auto i : take(lost_free)) s.lost.push_back(i);
    if (!known_free.empty())
      for (auto j : take(known_free)) s.known.push_back(j);
  } else {
    std::vector<std::size_t> all_lost(n_lost), all_known(n_known);
    for (std::size_t i = 0; i < n_lost; ++i) all_lost[i] = i;
    for (std::size_t j = 0; j < n_known; ++j) all_known[j] = j;
    s.lost = take(all_lost);
    s.known = take(all_known);
  }
  std::sort(s.lost.begin(), s.lost.end());
  std::sort(s.known.begin(), s.known.end());
  return s;
}

/// Maximum-likelihood training of the model on the flow-weighted pairs of
/// the subset. Fresh Adam state. Returns the mean loss per known word for
/// each epoch.
template <typename Scalar>
std::vector<double> mle_train(ModelParams<Scalar>& params, const TrainConfig& cfg, std::span<const Word> lost,
                              std::span<const Word> known, const TrainingSubset& subset, const FlowState& flow,
                              std::uint64_t seed) {
  std::vector<Word> sub_lost, sub_known;
  for (auto i : subset.lost) sub_lost.push_back(lost[i]);
  for (auto j : subset.known) sub_known.push_back(known[j]);

  // Pairs with positive flow, grouped per local known index.
  std::vector<std::vector<WeightedPair>> by_known(sub_known.size());
  for (std::size_t b = 0; b < subset.known.size(); ++b)
    for (std::size_t a = 0; a < subset.lost.size(); ++a) {
      const double f = flow.value(subset.lost[a], subset.known[b]);
      if (f > 0.0) by_known[b].push_back({a, b, f});
    }

  Adam<Scalar> opt(params, cfg.adam);
  Rng rng = make_rng(seed, {3});
  std::vector<std::size_t> order(sub_known.size());
  for (std::size_t b = 0; b < order.size(); ++b) order[b] = b;
  std::vector<double> curve;
  std::vector<WeightedPair> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_decay)
      opt.set_learning_rate(cfg.adam.learning_rate * (1.0 - static_cast<double>(epoch) / cfg.epochs));
    detail::shuffle(order, rng);
    double total = 0.0;
    std::size_t words = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const auto end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t q = start; q < end; ++q)
        batch.insert(batch.end(), by_known[order[q]].begin(), by_known[order[q]].end());
      if (batch.empty()) continue;
      auto g = gradients(params, cfg.model, sub_lost, sub_known, batch);
      total += g.loss.total;
      words += g.loss.words;
      opt.update(params, g.grad);
      if (!params.all_finite()) {
        std::string bad;
        params.for_each([&](std::string_view n, const MatrixT<Scalar>& m) {
          if (bad.empty() && !m.allFinite()) bad = std::string(n);
        });
        throw NumericError(bad, "parameter '" + bad + "' became non-finite");
      }
    }
    curve.push_back(words ? total / static_cast<double>(words) : 0.0);
  }
  return curve;
}

/// Fills in defaults that depend on the corpus.
inline TrainConfig resolve_config(TrainConfig cfg, const Lexicon& lost, const Lexicon& known) {
  cfg.model.lost_symbols = lost.inventory.symbol_count();
  cfg.model.known_symbols = known.inventory.symbol_count();
  const auto nx = static_cast<std::int64_t>(lost.size()), ny = static_cast<std::int64_t>(known.size());
  if (cfg.cognates == 0) cfg.cognates = cfg.noiseless ? std::min(nx, ny) : (nx + 1) / 2;
  if (!cfg.schedule_from_config) cfg.schedule.kind = cfg.noiseless ? ScheduleKind::constant : ScheduleKind::ramp;
  cfg.schedule.cognates = cfg.cognates;
  cfg.schedule.iterations = cfg.iterations;
  cfg.validate();
  return cfg;
}

/// A run in progress: everything the outer loop carries between iterations.
template <typename Scalar = double>
struct RunState {
  TrainConfig cfg;  // resolved
  TrainingSubset subset;
  TrainResult<Scalar> out;  // out.flow is the live flow
  int done = 0;             // iterations completed

  int total() const { return cfg.use_flow ? cfg.iterations : 1; }
  bool finished() const { return done >= total(); }
};

/// Resolves the config, picks the training subset and sets up the uniform
/// initial flow. No training happens yet.
template <typename Scalar = double>
RunState<Scalar> start_run(const Lexicon& lost, const Lexicon& known, TrainConfig cfg,
                           const GoldTable* gold = nullptr) {
  if (lost.vocabulary.empty() || known.vocabulary.empty()) throw ConfigError("vocabularies must be nonempty");
  RunState<Scalar> st;
  st.cfg = resolve_config(std::move(cfg), lost, known);
  const auto& X = lost.vocabulary.words;
  const auto& Y = known.vocabulary.words;
  st.out.record.seed = st.cfg.seed;
  st.out.record.cognates = st.cfg.cognates;
  st.subset = select_subset(X.size(), Y.size(), st.cfg.subset_fraction, st.cfg.min_subset_words, gold, st.cfg.seed);
  st.out.record.subset_lost = st.subset.lost.size();
  st.out.record.subset_known = st.subset.known.size();
  st.out.flow = init_flow(X.size(), Y.size(), static_cast<double>(st.cfg.cognates));
  return st;
}

/// Runs iterations until `until` (clamped to the run's length) are done.
template <typename Scalar = double>
void advance_run(RunState<Scalar>& st, const Lexicon& lost, const Lexicon& known, int until,
                 const GoldTable* gold = nullptr, const TrainHooks<Scalar>& hooks = {}) {
  const auto& cfg = st.cfg;
  auto& out = st.out;
  auto& flow = out.flow;
  const auto& X = lost.vocabulary.words;
  const auto& Y = known.vocabulary.words;
  auto log = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };
  const CostOptions copt{cfg.top_k, cfg.model.samples, true, cfg.threads};

  for (int tau = st.done + 1; tau <= std::min(until, st.total()); ++tau) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord it;
    it.iteration = tau;
    auto params = init_params<Scalar>(cfg.model, iteration_param_seed(cfg.seed, tau));
    if (hooks.on_init) hooks.on_init(tau, params);
    try {
      it.loss_curve = mle_train(params, cfg, X, Y, st.subset, flow,
                                derive_seed(cfg.seed, {3, static_cast<std::uint64_t>(tau)}));
      out.costs = build_cost_matrix(params, cfg.model, X, Y, copt, derive_seed(cfg.seed, {4, static_cast<std::uint64_t>(tau)}));
    } catch (const NumericError& e) {
      throw NumericError(e.tensor(), "iteration " + std::to_string(tau) + ": " + e.what());
    }

    if (cfg.use_flow) {
      it.demand_requested = demand_at(cfg.schedule, tau);
      auto net = make_network(out.costs, it.demand_requested, cfg.known_capacity);
      FlowAssignment assignment;
      try {
        assignment = solve_mcf(net);
      } catch (const SolverError& e) {
        std::ostringstream msg;
        msg << "iteration " << tau << ": demand " << it.demand_requested << " infeasible, lowered to "
            << e.max_feasible_flow();
        out.record.warnings.push_back(msg.str());
        log(msg.str());
        net.demand = e.max_feasible_flow();
        assignment = solve_mcf(net);
      }
      it.demand_used = assignment.flow;
      it.flow_cost = assignment.total_cost;
      it.objective = static_cast<double>(assignment.total_cost) / kCostScale;
      flow = decay_flow(flow, assignment, cfg.gamma);
    } else {
      // No solver: the objective is the sum of each lost word's best cost.
      double total = 0.0;
      for (std::size_t i = 0; i < out.costs.lost_count(); ++i)
        if (!out.costs.candidates(i).empty()) total += out.costs.candidates(i).front().cost;
      it.objective = total;
    }
    flow.set_iteration(tau);
    out.pairs = extract_pairs(flow, &out.costs);
    if (gold) it.accuracy = score(out.pairs, *gold).accuracy;
    it.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream msg;
    msg << "iter " << tau << " loss " << (it.loss_curve.empty() ? 0.0 : it.loss_curve.back()) << " demand "
        << it.demand_used << " objective " << it.objective;
    if (it.accuracy) msg << " accuracy " << *it.accuracy;
    msg << " (" << it.seconds << "s)";
    log(msg.str());

    out.record.iterations.push_back(std::move(it));
    out.params = std::move(params);  // the next iteration starts from a fresh init
    st.done = tau;
  }
}

/// One full run of the iterative procedure. `gold` is used only to build a
/// subset with matching noncognate rate and to report accuracy.
template <typename Scalar = double>
TrainResult<Scalar> train(const Lexicon& lost, const Lexicon& known, TrainConfig cfg, const GoldTable* gold = nullptr,
                          const TrainHooks<Scalar>& hooks = {}) {
  auto st = start_run<Scalar>(lost, known, std::move(cfg), gold);
  advance_run(st, lost, known, st.total(), gold, hooks);
  return std::move(st.out);
}

/// Index of the run with the lowest final objective; ties go to the lower
/// seed.
inline std::size_t select_run(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("no runs to select from");
  std::size_t best = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const double a = records[r].objective(), b = records[best].objective();
    if (a < b || (a == b && records[r].seed < records[best].seed)) best = r;
  }
  return best;
}

/// Runs every config and keeps the run with the lowest final objective;
/// ties go to the lower seed.
template <typename Scalar = double>
TrainResult<Scalar> best_of(const Lexicon& lost, const Lexicon& known, const std::vector<TrainConfig>& runs,
                            const GoldTable* gold = nullptr, const TrainHooks<Scalar>& hooks = {}) {
  if (runs.empty()) throw ConfigError("restart count must be at least 1");
  std::vector<std::optional<TrainResult<Scalar>>> results(runs.size());
  const int outer = runs.size() > 1 ? std::min<int>(runs.front().threads, static_cast<int>(runs.size())) : 1;
  parallel_for(runs.size(), outer, [&](std::size_t r) {
    auto cfg = runs[r];
    if (outer > 1) cfg.threads = 1;
    results[r] = train<Scalar>(lost, known, cfg, gold, hooks);
  });
  std::vector<RunRecord> records;
  for (const auto& r : results) records.push_back(r->record);
  return std::move(*results[select_run(records)]);
}

/// Random restarts with seeds seed, seed+1, ..., seed+restarts-1. With
/// `restart_screen` = k > 0 every restart runs k iterations, and only the one
/// with the lowest objective at that point goes on to finish. The survivor's
/// result is the same as training its seed alone.
template <typename Scalar = double>
TrainResult<Scalar> multi_restart(const Lexicon& lost, const Lexicon& known, const TrainConfig& cfg,
                                  const GoldTable* gold = nullptr, const TrainHooks<Scalar>& hooks = {}) {
  if (cfg.restarts < 1) throw ConfigError("restart count must be at least 1");
  std::vector<TrainConfig> runs;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    runs.push_back(c);
  }
  if (cfg.restart_screen <= 0 || runs.size() == 1) return best_of<Scalar>(lost, known, runs, gold, hooks);

  std::vector<std::optional<RunState<Scalar>>> states(runs.size());
  const int outer = std::min<int>(cfg.threads, static_cast<int>(runs.size()));
  parallel_for(runs.size(), outer, [&](std::size_t r) {
    auto c = runs[r];
    if (outer > 1) c.threads = 1;
    states[r] = start_run<Scalar>(lost, known, c, gold);
    advance_run(*states[r], lost, known, cfg.restart_screen, gold, hooks);
  });
  std::vector<RunRecord> records;
  for (const auto& s : states) records.push_back(s->out.record);
  auto& best = *states[select_run(records)];
  if (hooks.log)
    hooks.log("restart screen: seed " + std::to_string(best.cfg.seed) + " continues after " +
              std::to_string(best.done) + " iteration(s)");
  best.cfg.threads = cfg.threads;
  advance_run(best, lost, known, best.total(), gold, hooks);
  return std::move(best.out);
}

}  // namespace decipher
