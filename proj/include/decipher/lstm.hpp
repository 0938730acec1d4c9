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

#include <Eigen/Dense>

namespace decipher {

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Gate layout in the stacked 4h rows: input, forget, cell candidate, output.
template <typename Scalar>
struct LstmWeights {
  MatrixT<Scalar> input;      // 4h x in
  MatrixT<Scalar> recurrent;  // 4h x h
  MatrixT<Scalar> bias;       // 4h x 1

  Eigen::Index hidden() const { return recurrent.cols(); }
};

/// Everything the backward pass needs from one sequence run.
template <typename Scalar>
struct LstmTrace {
  MatrixT<Scalar> inputs;  // in x T
  MatrixT<Scalar> gates;   // 4h x T, post-activation
  MatrixT<Scalar> cells;   // h x T
  MatrixT<Scalar> hidden;  // h x T
  bool reverse = false;
};

namespace detail {
template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return (S(1) / (S(1) + (-z.array()).exp())).matrix();
}
}  // namespace detail

/// Single LSTM step from (h_prev, c_prev); writes the gate activations.
template <typename Scalar>
void lstm_step(const LstmWeights<Scalar>& w, const VectorT<Scalar>& pre_input,
               const VectorT<Scalar>& h_prev, const VectorT<Scalar>& c_prev,
               Eigen::Ref<VectorT<Scalar>> gates, Eigen::Ref<VectorT<Scalar>> c,
               Eigen::Ref<VectorT<Scalar>> h) {
  const auto H = w.hidden();
  VectorT<Scalar> z = pre_input + w.recurrent * h_prev + w.bias.col(0);
  gates.segment(0, H) = detail::sigmoid(z.segment(0, H));
  gates.segment(H, H) = detail::sigmoid(z.segment(H, H));
  gates.segment(2 * H, H) = z.segment(2 * H, H).array().tanh().matrix();
  gates.segment(3 * H, H) = detail::sigmoid(z.segment(3 * H, H));
  c = gates.segment(H, H).cwiseProduct(c_prev) + gates.segment(0, H).cwiseProduct(gates.segment(2 * H, H));
  h = gates.segment(3 * H, H).cwiseProduct(c.array().tanh().matrix());
}

/// Runs the LSTM over the columns of `inputs` (right to left when
/// `reverse`), starting from zero state. Column t of `hidden` is the state
/// after consuming input column t.
template <typename Scalar>
LstmTrace<Scalar> lstm_forward(const LstmWeights<Scalar>& w, const MatrixT<Scalar>& inputs,
                               bool reverse = false) {
  const auto H = w.hidden();
  const auto T = inputs.cols();
  LstmTrace<Scalar> tr;
  tr.inputs = inputs;
  tr.reverse = reverse;
  tr.gates.resize(4 * H, T);
  tr.cells.resize(H, T);
  tr.hidden.resize(H, T);
  const MatrixT<Scalar> pre = w.input * inputs;
  VectorT<Scalar> h = VectorT<Scalar>::Zero(H), c = VectorT<Scalar>::Zero(H);
  VectorT<Scalar> g(4 * H), c_new(H), h_new(H);
  for (Eigen::Index s = 0; s < T; ++s) {
    const auto t = reverse ? T - 1 - s : s;
    lstm_step<Scalar>(w, pre.col(t), h, c, g, c_new, h_new);
    tr.gates.col(t) = g;
    tr.cells.col(t) = c_new;
    tr.hidden.col(t) = h_new;
    h = h_new;
    c = c_new;
  }
  return tr;
}

/// Backpropagates `d_hidden` (h x T) through the sequence. Accumulates
/// weight gradients into `grad` and returns the input gradients (in x T).
template <typename Scalar>
MatrixT<Scalar> lstm_backward(const LstmWeights<Scalar>& w, const LstmTrace<Scalar>& tr,
                              const MatrixT<Scalar>& d_hidden, LstmWeights<Scalar>& grad) {
  const auto H = w.hidden();
  const auto T = tr.hidden.cols();
  MatrixT<Scalar> dz(4 * H, T);
  VectorT<Scalar> dh_next = VectorT<Scalar>::Zero(H), dc_next = VectorT<Scalar>::Zero(H);
  VectorT<Scalar> zero = VectorT<Scalar>::Zero(H);
  MatrixT<Scalar> h_prev_all(H, T);
  for (Eigen::Index s = T - 1; s >= 0; --s) {
    const auto t = tr.reverse ? T - 1 - s : s;
    const bool first = (s == 0);
    const auto prev = tr.reverse ? t + 1 : t - 1;
    const VectorT<Scalar>& c_prev_ref = zero;
    VectorT<Scalar> c_prev = first ? c_prev_ref : VectorT<Scalar>(tr.cells.col(prev));
    h_prev_all.col(t) = first ? zero : VectorT<Scalar>(tr.hidden.col(prev));

    auto i = tr.gates.col(t).segment(0, H).array();
    auto f = tr.gates.col(t).segment(H, H).array();
    auto g = tr.gates.col(t).segment(2 * H, H).array();
    auto o = tr.gates.col(t).segment(3 * H, H).array();
    const auto tc = tr.cells.col(t).array().tanh().eval();

    const auto dh = (d_hidden.col(t) + dh_next).array().eval();
    const auto dc = (dh * o * (Scalar(1) - tc.square()) + dc_next.array()).eval();
    dz.col(t).segment(0, H) = (dc * g * i * (Scalar(1) - i)).matrix();
    dz.col(t).segment(H, H) = (dc * c_prev.array() * f * (Scalar(1) - f)).matrix();
    dz.col(t).segment(2 * H, H) = (dc * i * (Scalar(1) - g.square())).matrix();
    dz.col(t).segment(3 * H, H) = (dh * tc * o * (Scalar(1) - o)).matrix();

    dh_next = w.recurrent.transpose() * dz.col(t);
    dc_next = (dc * f).matrix();
  }
  grad.input.noalias() += dz * tr.inputs.transpose();
  grad.recurrent.noalias() += dz * h_prev_all.transpose();
  grad.bias.col(0) += dz.rowwise().sum();
  return w.input.transpose() * dz;
}

}  // namespace decipher
