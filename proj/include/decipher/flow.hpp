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

// Minimum-cost flow assignment between lost and known words, and the
// decayed fractional flow state carried across training iterations.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "decipher/corpus.hpp"
#include "decipher/cost_matrix.hpp"
#include "decipher/error.hpp"

namespace decipher {

struct FlowEdge {
  std::size_t lost = 0;
  std::size_t known = 0;
  std::int64_t cost = 0;
};

/// Source -> lost (capacity 1) -> known (capacity 1 per edge) -> sink
/// (capacity `known_capacity`). Only the middle edges carry cost.
struct FlowNetwork {
  std::size_t lost_count = 0;
  std::size_t known_count = 0;
  std::vector<FlowEdge> edges;
  std::int64_t known_capacity = 1;
  std::int64_t demand = 0;

  void validate() const {
    if (known_capacity < 0) throw ConfigError("known-side capacity must be nonnegative");
    if (demand < 0) throw ConfigError("demand must be nonnegative");
    for (const auto& e : edges) {
      if (e.lost >= lost_count || e.known >= known_count)
        throw ConfigError("flow edge endpoint out of range");
    }
  }
};

/// Builds the network from the retained candidates of a cost matrix.
inline FlowNetwork make_network(const CostMatrix& costs, std::int64_t demand,
                                std::int64_t known_capacity = 1) {
  FlowNetwork net;
  net.lost_count = costs.lost_count();
  net.known_count = costs.known_count();
  net.known_capacity = known_capacity;
  net.demand = demand;
  for (std::size_t i = 0; i < costs.lost_count(); ++i)
    for (const auto& c : costs.candidates(i))
      net.edges.push_back({i, c.known, scale_cost(c.cost)});
  return net;
}

struct FlowAssignment {
  /// Middle edges carrying one unit of flow, sorted by (lost, known).
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::int64_t total_cost = 0;
  std::int64_t flow = 0;
};

namespace detail {

class ResidualGraph {
 public:
  struct Arc {
    int to;
    std::int64_t cap;
    std::int64_t cost;
  };

  explicit ResidualGraph(int n) : adj_(static_cast<std::size_t>(n)) {}

  int add(int from, int to, std::int64_t cap, std::int64_t cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap, cost});
    arcs_.push_back({from, 0, -cost});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  /// Successive shortest paths with Johnson potentials. All original costs
  /// are nonnegative, so zero initial potentials are valid. Returns the flow
  /// actually sent (< demand when infeasible) and its cost.
  std::pair<std::int64_t, std::int64_t> run(int s, int t, std::int64_t demand) {
    const auto n = adj_.size();
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> pot(n, 0), dist(n);
    std::vector<int> via(n);
    std::int64_t flow = 0, cost = 0;
    using Item = std::pair<std::int64_t, int>;
    while (flow < demand) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(via.begin(), via.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[static_cast<std::size_t>(s)] = 0;
      heap.emplace(0, s);
      while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        const auto uu = static_cast<std::size_t>(u);
        if (d != dist[uu]) continue;
        for (int id : adj_[uu]) {
          const auto& a = arcs_[static_cast<std::size_t>(id)];
          if (a.cap <= 0) continue;
          const auto v = static_cast<std::size_t>(a.to);
          const std::int64_t nd = d + a.cost + pot[uu] - pot[v];
          if (nd < dist[v]) {
            dist[v] = nd;
            via[v] = id;
            heap.emplace(nd, a.to);
          }
        }
      }
      if (dist[static_cast<std::size_t>(t)] >= kInf) break;
      for (std::size_t v = 0; v < n; ++v)
        if (dist[v] < kInf) pot[v] += dist[v];

      std::int64_t push = demand - flow;
      for (int v = t; v != s;) {
        const int id = via[static_cast<std::size_t>(v)];
        push = std::min(push, arcs_[static_cast<std::size_t>(id)].cap);
        v = arcs_[static_cast<std::size_t>(id ^ 1)].to;
      }
      for (int v = t; v != s;) {
        const int id = via[static_cast<std::size_t>(v)];
        arcs_[static_cast<std::size_t>(id)].cap -= push;
        arcs_[static_cast<std::size_t>(id ^ 1)].cap += push;
        cost += push * arcs_[static_cast<std::size_t>(id)].cost;
        v = arcs_[static_cast<std::size_t>(id ^ 1)].to;
      }
      flow += push;
    }
    return {flow, cost};
  }

  std::int64_t flow_on(int id) const { return arcs_[static_cast<std::size_t>(id ^ 1)].cap; }

 private:
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace detail

/// Integral minimum-cost flow meeting `network.demand` exactly.
/// Throws SolverError carrying the maximum feasible flow when the demand
/// cannot be routed.
inline FlowAssignment solve_mcf(const FlowNetwork& network) {
  network.validate();
  const int n_lost = static_cast<int>(network.lost_count);
  const int n_known = static_cast<int>(network.known_count);
  const int source = 0, sink = n_lost + n_known + 1;
  detail::ResidualGraph g(n_lost + n_known + 2);
  for (int i = 0; i < n_lost; ++i) g.add(source, 1 + i, 1, 0);
  std::vector<int> middle;
  middle.reserve(network.edges.size());
  for (const auto& e : network.edges) {
    if (e.cost < 0) throw ConfigError("flow edge costs must be nonnegative");
    middle.push_back(g.add(1 + static_cast<int>(e.lost), 1 + n_lost + static_cast<int>(e.known), 1, e.cost));
  }
  for (int j = 0; j < n_known; ++j) g.add(1 + n_lost + j, sink, network.known_capacity, 0);

  auto [flow, cost] = g.run(source, sink, network.demand);
  if (flow < network.demand)
    throw SolverError(flow, "demand " + std::to_string(network.demand) +
                                " exceeds maximum feasible flow " + std::to_string(flow));
  FlowAssignment out;
  out.flow = flow;
  out.total_cost = cost;
  for (std::size_t k = 0; k < middle.size(); ++k)
    if (g.flow_on(middle[k]) > 0) out.pairs.emplace_back(network.edges[k].lost, network.edges[k].known);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

/// Maximum flow the network can carry regardless of its demand.
inline std::int64_t max_feasible_flow(FlowNetwork network) {
  network.demand = static_cast<std::int64_t>(network.lost_count);
  try {
    return solve_mcf(network).flow;
  } catch (const SolverError& e) {
    return e.max_feasible_flow();
  }
}

// ---------------------------------------------------------------------------
// Fractional flow state

/// Flow values f(i,j) = background + sparse(i,j). The background is the
/// decayed uniform initialization shared by every pair; the sparse part holds
/// the decayed solver assignments.
class FlowState {
 public:
  FlowState() = default;
  FlowState(std::size_t n_lost, std::size_t n_known, double background)
      : n_lost_(n_lost), n_known_(n_known), background_(background) {}

  std::size_t lost_count() const { return n_lost_; }
  std::size_t known_count() const { return n_known_; }
  double background() const { return background_; }
  int iteration() const { return iteration_; }

  double value(std::size_t lost, std::size_t known) const {
    auto it = sparse_.find({lost, known});
    return background_ + (it == sparse_.end() ? 0.0 : it->second);
  }

  const std::map<std::pair<std::size_t, std::size_t>, double>& sparse() const { return sparse_; }

  /// Sparse entries of one lost word's row, in known-index order.
  std::vector<std::pair<std::size_t, double>> row(std::size_t lost) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (auto it = sparse_.lower_bound({lost, 0}); it != sparse_.end() && it->first.first == lost; ++it)
      out.emplace_back(it->first.second, it->second);
    return out;
  }

  void set_sparse(std::size_t lost, std::size_t known, double v) {
    if (v > 0.0)
      sparse_[{lost, known}] = v;
    else
      sparse_.erase({lost, known});
  }
  void set_background(double b) { background_ = b; }
  void set_iteration(int t) { iteration_ = t; }

  friend bool operator==(const FlowState&, const FlowState&) = default;

 private:
  std::size_t n_lost_ = 0;
  std::size_t n_known_ = 0;
  double background_ = 0.0;
  std::map<std::pair<std::size_t, std::size_t>, double> sparse_;
  int iteration_ = 0;
};

/// Uniform initialization f(i,j) = N / (|X| |Y|).
inline FlowState init_flow(std::size_t n_lost, std::size_t n_known, double cognates) {
  if (!(cognates > 0.0)) throw ConfigError("number of cognate pairs must be positive");
  if (n_lost == 0 || n_known == 0) throw ConfigError("vocabularies must be nonempty");
  const double total = static_cast<double>(n_lost) * static_cast<double>(n_known);
  if (cognates > total) throw ConfigError("more cognate pairs requested than word pairs exist");
  return FlowState(n_lost, n_known, cognates / total);
}

/// f = gamma * prev + (1 - gamma) * raw, elementwise.
inline FlowState decay_flow(const FlowState& prev, const FlowAssignment& raw, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("decay gamma must lie in [0,1)");
  FlowState next(prev.lost_count(), prev.known_count(), gamma * prev.background());
  for (const auto& [key, v] : prev.sparse()) next.set_sparse(key.first, key.second, gamma * v);
  for (const auto& [i, j] : raw.pairs) {
    auto cur = next.value(i, j) - next.background();
    next.set_sparse(i, j, cur + (1.0 - gamma));
  }
  next.set_iteration(prev.iteration() + 1);
  return next;
}

struct PredictedPair {
  std::size_t lost = 0;
  std::size_t known = 0;
  double weight = 0.0;
};

/// For every lost word with positive mass, the known word carrying the most
/// flow. Ties go to the lower recorded cost (unrecorded counts as infinite),
/// then to the lower known index.
inline std::vector<PredictedPair> extract_pairs(const FlowState& state,
                                                const CostMatrix* costs = nullptr) {
  constexpr double kNoCost = std::numeric_limits<double>::infinity();
  auto cost_of = [&](std::size_t i, std::size_t j) {
    if (!costs || i >= costs->lost_count()) return kNoCost;
    return costs->lookup(i, j).value_or(kNoCost);
  };
  std::vector<PredictedPair> out;
  for (std::size_t i = 0; i < state.lost_count(); ++i) {
    const auto row = state.row(i);
    std::size_t best = 0;
    double best_v = -1.0, best_c = kNoCost;
    auto consider = [&](std::size_t j, double v) {
      const double c = cost_of(i, j);
      if (v > best_v || (v == best_v && (c < best_c || (c == best_c && j < best)))) {
        best = j;
        best_v = v;
        best_c = c;
      }
    };
    if (!row.empty()) {
      for (const auto& [j, v] : row) consider(j, state.background() + v);
    } else if (state.background() > 0.0) {
      // every known word ties at the background value
      if (costs && i < costs->lost_count() && !costs->candidates(i).empty()) {
        for (const auto& c : costs->candidates(i)) consider(c.known, state.background());
      } else {
        consider(0, state.background());
      }
    }
    if (best_v > 0.0) out.push_back({i, best, best_v});
  }
  return out;
}

/// Assignment dump: lost word, known word, flow weight.
inline void write_assignment(const std::filesystem::path& path, const std::vector<PredictedPair>& pairs,
                             const Lexicon& lost, const Lexicon& known) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.precision(9);
  for (const auto& p : pairs)
    out << lost.render(p.lost) << '\t' << known.render(p.known) << '\t' << p.weight << '\n';
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

/// Reads an assignment dump back into index pairs.
inline std::vector<PredictedPair> load_assignment(const std::filesystem::path& path,
                                                  const Lexicon& lost, const Lexicon& known) {
  const auto lost_idx = detail::word_index(lost);
  const auto known_idx = detail::word_index(known);
  std::vector<PredictedPair> out;
  std::size_t line_no = 0;
  const std::string text = detail::read_file(path);
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    const auto t1 = line.find('\t');
    if (t1 == std::string_view::npos)
      throw InputError("assignment line " + std::to_string(line_no) + ": missing tab");
    const auto t2 = line.find('\t', t1 + 1);
    const auto lw = detail::normalize_word(line.substr(0, t1), lost.inventory.format());
    const auto kw = detail::normalize_word(
        line.substr(t1 + 1, t2 == std::string_view::npos ? std::string_view::npos : t2 - t1 - 1),
        known.inventory.format());
    double w = 1.0;
    if (t2 != std::string_view::npos) w = std::stod(std::string(line.substr(t2 + 1)));
    auto li = lost_idx.find(lw);
    auto ki = known_idx.find(kw);
    if (li == lost_idx.end() || ki == known_idx.end())
      throw InputError("assignment line " + std::to_string(line_no) + ": word not in vocabulary");
    out.push_back({li->second, ki->second, w});
  }
  return out;
}

}  // namespace decipher
