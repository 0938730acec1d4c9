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

#include <cmath>
#include <string_view>
#include <vector>

#include "decipher/seq2seq.hpp"

namespace decipher {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moment estimates for one parameter set. Resetting the optimizer
/// means constructing a fresh instance.
template <typename Scalar = double>
class Adam {
 public:
  Adam(const ModelParams<Scalar>& like, AdamConfig config)
      : cfg_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

  void update(ModelParams<Scalar>& params, const ModelParams<Scalar>& grad) {
    ++t_;
    const double b1t = 1.0 - std::pow(cfg_.beta1, t_);
    const double b2t = 1.0 - std::pow(cfg_.beta2, t_);
    const auto lr = static_cast<Scalar>(cfg_.learning_rate * std::sqrt(b2t) / b1t);
    const auto b1 = static_cast<Scalar>(cfg_.beta1), b2 = static_cast<Scalar>(cfg_.beta2);
    const auto eps = static_cast<Scalar>(cfg_.epsilon);

    std::vector<MatrixT<Scalar>*> p, m, v;
    std::vector<const MatrixT<Scalar>*> g;
    params.for_each([&](std::string_view, MatrixT<Scalar>& x) { p.push_back(&x); });
    m_.for_each([&](std::string_view, MatrixT<Scalar>& x) { m.push_back(&x); });
    v_.for_each([&](std::string_view, MatrixT<Scalar>& x) { v.push_back(&x); });
    grad.for_each([&](std::string_view, const MatrixT<Scalar>& x) { g.push_back(&x); });
    for (std::size_t k = 0; k < p.size(); ++k) {
      *m[k] = b1 * *m[k] + (Scalar(1) - b1) * *g[k];
      *v[k] = b2 * *v[k] + (Scalar(1) - b2) * g[k]->cwiseAbs2();
      p[k]->array() -= lr * m[k]->array() / (v[k]->array().sqrt() + eps);
    }
  }

  long steps() const { return t_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

 private:
  AdamConfig cfg_;
  ModelParams<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace decipher
