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

// Independent reference computations for self-checks and tests. Nothing
// here calls into the code paths it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "decipher/corpus.hpp"
#include "decipher/flow.hpp"
#include "decipher/random.hpp"
#include "decipher/seq2seq.hpp"

namespace decipher::oracle {

// ---------------------------------------------------------------------------
// Finite differences

struct GradCheckResult {
  double worst_relative = 0.0;
  std::string worst_tensor;
  std::size_t entries = 0;
};

/// Central differences of `loss_fn` against `analytic`, entry by entry.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult check_gradient(ModelParams<double> params, const ModelParams<double>& analytic,
                                      const std::function<double(const ModelParams<double>&)>& loss_fn,
                                      double step = 1e-5, double floor = 1e-6) {
  GradCheckResult out;
  std::vector<MatrixT<double>*> tensors;
  std::vector<std::string> names;
  params.for_each([&](std::string_view n, MatrixT<double>& m) {
    tensors.push_back(&m);
    names.emplace_back(n);
  });
  std::vector<const MatrixT<double>*> grads;
  analytic.for_each([&](std::string_view, const MatrixT<double>& m) { grads.push_back(&m); });
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    auto& m = *tensors[k];
    for (Eigen::Index e = 0; e < m.size(); ++e) {
      const double orig = m(e);
      m(e) = orig + step;
      const double up = loss_fn(params);
      m(e) = orig - step;
      const double down = loss_fn(params);
      m(e) = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = (*grads[k])(e);
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > out.worst_relative) {
        out.worst_relative = rel;
        out.worst_tensor = names[k] + "[" + std::to_string(e) + "]";
      }
      ++out.entries;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimum-cost flow by enumeration

/// Exhaustive minimum over integral assignments: every lost word picks one
/// of its candidate edges or nothing, known words respect their capacity and
/// exactly `demand` words are matched. Returns nullopt when infeasible.
inline std::optional<std::int64_t> brute_force_min_cost(const FlowNetwork& net) {
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> options(net.lost_count);
  for (const auto& e : net.edges) options[e.lost].emplace_back(e.known, e.cost);
  std::vector<std::int64_t> load(net.known_count, 0);
  std::optional<std::int64_t> best;
  std::function<void(std::size_t, std::int64_t, std::int64_t)> rec = [&](std::size_t i, std::int64_t matched,
                                                                           std::int64_t cost) {
    if (matched > net.demand) return;
    if (i == net.lost_count) {
      if (matched == net.demand && (!best || cost < *best)) best = cost;
      return;
    }
    rec(i + 1, matched, cost);
    for (const auto& [j, c] : options[i]) {
      if (load[j] >= net.known_capacity) continue;
      ++load[j];
      rec(i + 1, matched + 1, cost + c);
      --load[j];
    }
  };
  rec(0, 0, 0);
  return best;
}

/// Random small instance: up to `max_side` nodes per side, each lost word
/// keeping a random subset of known words with integer costs in [0, max_cost].
/// Demand may exceed what the edges can carry.
inline FlowNetwork random_network(Rng& rng, std::size_t max_side, std::int64_t max_demand, std::int64_t max_cost,
                                  std::int64_t capacity = 1) {
  FlowNetwork net;
  net.lost_count = 1 + uniform_index(rng, max_side);
  net.known_count = 1 + uniform_index(rng, max_side);
  net.known_capacity = capacity;
  for (std::size_t i = 0; i < net.lost_count; ++i)
    for (std::size_t j = 0; j < net.known_count; ++j)
      if (uniform01(rng) < 0.6)
        net.edges.push_back({i, j, static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(max_cost) + 1))});
  net.demand = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(max_demand)));
  return net;
}

// ---------------------------------------------------------------------------
// Edit distance by script enumeration

/// Smallest number of unit edits turning `a` into `b`, found by breadth-first
/// search over all strings reachable with insert/delete/substitute using
/// symbols drawn from a and b. Only practical for tiny inputs.
inline int edit_distance_by_search(const Word& a, const Word& b, int max_depth) {
  std::set<int> alphabet(a.begin(), a.end());
  alphabet.insert(b.begin(), b.end());
  std::set<Word> frontier{a}, seen{a};
  for (int depth = 0; depth <= max_depth; ++depth) {
    if (frontier.count(b)) return depth;
    std::set<Word> next;
    for (const auto& w : frontier) {
      auto push = [&](Word v) {
        if (seen.insert(v).second) next.insert(std::move(v));
      };
      for (std::size_t k = 0; k <= w.size(); ++k) {
        for (int s : alphabet) {
          Word ins = w;
          ins.insert(ins.begin() + static_cast<std::ptrdiff_t>(k), s);
          push(std::move(ins));
        }
        if (k < w.size()) {
          Word del = w;
          del.erase(del.begin() + static_cast<std::ptrdiff_t>(k));
          push(std::move(del));
          for (int s : alphabet) {
            if (s == w[k]) continue;
            Word sub = w;
            sub[k] = s;
            push(std::move(sub));
          }
        }
      }
    }
    frontier = std::move(next);
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Exact output distributions of a toy decoder

/// Enumerates every output string of length < max_len (plus EOS) with its
/// exact probability, by expanding the decoder one step at a time. Strings
/// that reach max_len are reported without their EOS factor.
struct EnumeratedOutput {
  Word word;
  double prob = 0.0;
};

inline std::vector<EnumeratedOutput> enumerate_outputs(const ModelParams<double>& params, const ModelConfig& cfg,
                                                       const Word& x) {
  // Independent re-derivation of the decoder recursion in plain loops.
  const auto E_x = (params.lost_weights * params.universal).eval();
  const auto E_y = (params.known_weights * params.universal).eval();
  const int H = cfg.hidden_dim;
  const auto n = static_cast<int>(x.size());

  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto lstm = [&](const LstmWeights<double>& w, const Eigen::VectorXd& in, Eigen::VectorXd& h, Eigen::VectorXd& c) {
    Eigen::VectorXd z = w.input * in + w.recurrent * h + w.bias.col(0);
    Eigen::VectorXd hn(H), cn(H);
    for (int k = 0; k < H; ++k) {
      const double ig = sig(z(k)), fg = sig(z(H + k)), gg = std::tanh(z(2 * H + k)), og = sig(z(3 * H + k));
      cn(k) = fg * c(k) + ig * gg;
      hn(k) = og * std::tanh(cn(k));
    }
    h = hn;
    c = cn;
  };

  Eigen::MatrixXd enc(2 * H, n);
  {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H), c = Eigen::VectorXd::Zero(H);
    for (int k = 0; k < n; ++k) {
      lstm(params.encoder_fwd, E_x.row(x[static_cast<std::size_t>(k)]).transpose(), h, c);
      enc.col(k).head(H) = h;
    }
    h.setZero();
    c.setZero();
    for (int k = n - 1; k >= 0; --k) {
      lstm(params.encoder_bwd, E_x.row(x[static_cast<std::size_t>(k)]).transpose(), h, c);
      enc.col(k).tail(H) = h;
    }
  }

  std::vector<EnumeratedOutput> out;
  std::function<void(Word, double, Eigen::VectorXd, Eigen::VectorXd, int)> expand =
      [&](Word prefix, double prob, Eigen::VectorXd h, Eigen::VectorXd c, int prev) {
        if (static_cast<int>(prefix.size()) == cfg.max_decode_length) {
          out.push_back({prefix, prob});
          return;
        }
        lstm(params.decoder, E_y.row(prev).transpose(), h, c);
        Eigen::VectorXd score(n);
        for (int k = 0; k < n; ++k) score(k) = h.dot(params.attention * enc.col(k));
        Eigen::VectorXd alpha = (score.array() - score.maxCoeff()).exp();
        alpha /= alpha.sum();
        Eigen::VectorXd ctx = enc * alpha;
        Eigen::VectorXd ht = (params.context_enc * ctx + params.context_dec * h + params.context_bias.col(0))
                                 .array()
                                 .tanh();
        Eigen::VectorXd cvec = Eigen::VectorXd::Zero(cfg.embedding_dim);
        for (int k = 0; k < n; ++k) cvec += alpha(k) * E_x.row(x[static_cast<std::size_t>(k)]).transpose();
        double g = 1.0;
        if (ht.norm() > 0) g = std::min(cfg.norm_ratio * cvec.norm() / ht.norm(), 1.0);
        Eigen::VectorXd logits = params.out_char * cvec + g * (params.out_context * ht) + params.out_bias.col(0);
        Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
        p /= p.sum();
        for (int s = 0; s < cfg.output_size(); ++s) {
          if (p(s) < 1e-15) continue;
          if (s == cfg.eos()) {
            out.push_back({prefix, prob * p(s)});
          } else {
            Word next = prefix;
            next.push_back(s);
            expand(next, prob * p(s), h, c, s);
          }
        }
      };
  expand({}, 1.0, Eigen::VectorXd::Zero(H), Eigen::VectorXd::Zero(H), cfg.bos());
  return out;
}

}  // namespace decipher::oracle
