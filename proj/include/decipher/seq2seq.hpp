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

// Character-level cognate model Pr(y | x).
//
// Encoder: bidirectional LSTM over lost-language character embeddings.
// Decoder: single LSTM over known-language characters, fed the previous
// target symbol (BOS first). At each step a bilinear attention over the
// encoder states gives weights alpha; the attended encoder state and the
// decoder state form the context vector h~ = tanh(Wc [ctx; s] + bc), and the
// attended character embedding c = sum_k alpha_k E_x(x_k) is merged in
// through the residual path [c ; g h~], g = min(r |c| / |h~|, 1), before the
// output projection.
//
// The decoder never sees the source, so for teacher forcing the per-word
// work splits into a per-source encoding, a per-target decoding and a cheap
// per-pair attention/projection stage. The mixture loss over many sources
// for the same target exploits that split.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "decipher/corpus.hpp"
#include "decipher/error.hpp"
#include "decipher/lstm.hpp"
#include "decipher/random.hpp"

namespace decipher {

enum class Regularizer { omega1, omega2 };

inline std::string_view to_string(Regularizer r) {
  return r == Regularizer::omega1 ? "omega1" : "omega2";
}
inline Regularizer parse_regularizer(std::string_view s) {
  if (s == "omega1" || s == "1") return Regularizer::omega1;
  if (s == "omega2" || s == "2") return Regularizer::omega2;
  throw ConfigError("unknown regularizer '" + std::string(s) + "'");
}

struct ModelConfig {
  int embedding_dim = 250;   // d
  int hidden_dim = 250;      // h
  int universal_size = 50;   // n_u
  double lambda = 0.5;       // alignment regularization weight
  double norm_ratio = 0.2;   // r
  Regularizer regularizer = Regularizer::omega1;
  int samples = 10;          // M for the expected edit distance
  int max_decode_length = 32;
  // Corpus symbol counts, excluding the reserved ids.
  int lost_symbols = 0;
  int known_symbols = 0;

  int lost_rows() const { return lost_symbols + 3; }
  int known_rows() const { return known_symbols + 3; }
  /// Output classes: the known symbols plus EOS (id == known_symbols).
  int output_size() const { return known_symbols + 1; }
  int eos() const { return known_symbols; }
  int bos() const { return known_symbols + 1; }

  void validate() const {
    if (embedding_dim <= 0 || hidden_dim <= 0 || universal_size <= 0)
      throw ConfigError("model dimensions must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("regularization weight must be nonnegative");
    if (!(norm_ratio > 0.0 && norm_ratio < 1.0)) throw ConfigError("norm ratio must lie in (0,1)");
    if (samples < 1) throw ConfigError("sample count must be at least 1");
    if (max_decode_length < 1) throw ConfigError("max decode length must be positive");
    if (lost_symbols < 1 || known_symbols < 1) throw ConfigError("symbol inventories must be nonempty");
  }
};

/// All learnable tensors. Biases are stored as single-column matrices so
/// every tensor can be visited uniformly.
template <typename Scalar = double>
struct ModelParams {
  using Matrix = MatrixT<Scalar>;

  Matrix universal;      // n_u x d
  Matrix lost_weights;   // n_x x n_u
  Matrix known_weights;  // n_y x n_u
  LstmWeights<Scalar> encoder_fwd;
  LstmWeights<Scalar> encoder_bwd;
  LstmWeights<Scalar> decoder;
  Matrix attention;      // h x 2h, score_k = s' A enc_k
  Matrix context_enc;    // h x 2h
  Matrix context_dec;    // h x h
  Matrix context_bias;   // h x 1
  Matrix out_char;       // n_o x d, acts on c
  Matrix out_context;    // n_o x h, acts on g h~
  Matrix out_bias;       // n_o x 1

  static constexpr std::size_t kTensorCount = 19;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("universal", self.universal);
    f("lost_weights", self.lost_weights);
    f("known_weights", self.known_weights);
    f("encoder_fwd.input", self.encoder_fwd.input);
    f("encoder_fwd.recurrent", self.encoder_fwd.recurrent);
    f("encoder_fwd.bias", self.encoder_fwd.bias);
    f("encoder_bwd.input", self.encoder_bwd.input);
    f("encoder_bwd.recurrent", self.encoder_bwd.recurrent);
    f("encoder_bwd.bias", self.encoder_bwd.bias);
    f("decoder.input", self.decoder.input);
    f("decoder.recurrent", self.decoder.recurrent);
    f("decoder.bias", self.decoder.bias);
    f("attention", self.attention);
    f("context_enc", self.context_enc);
    f("context_dec", self.context_dec);
    f("context_bias", self.context_bias);
    f("out_char", self.out_char);
    f("out_context", self.out_context);
    f("out_bias", self.out_bias);
  }
  template <typename F>
  void for_each(F&& f) { visit(*this, std::forward<F>(f)); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, std::forward<F>(f)); }

  /// Same shapes, all zeros.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.for_each([](std::string_view, Matrix& m) { m.setZero(); });
    return z;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    std::vector<const Matrix*> lhs, rhs;
    a.for_each([&](std::string_view, const Matrix& m) { lhs.push_back(&m); });
    b.for_each([&](std::string_view, const Matrix& m) { rhs.push_back(&m); });
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      if (lhs[k]->rows() != rhs[k]->rows() || lhs[k]->cols() != rhs[k]->cols()) return false;
      if (*lhs[k] != *rhs[k]) return false;
    }
    return true;
  }
};

/// Zero-initialized tensors with the shapes implied by `config`.
template <typename Scalar = double>
ModelParams<Scalar> shaped_params(const ModelConfig& config) {
  config.validate();
  using Matrix = MatrixT<Scalar>;
  const Eigen::Index d = config.embedding_dim, h = config.hidden_dim, u = config.universal_size;
  const Eigen::Index no = config.output_size();
  ModelParams<Scalar> p;
  p.universal = Matrix::Zero(u, d);
  p.lost_weights = Matrix::Zero(config.lost_rows(), u);
  p.known_weights = Matrix::Zero(config.known_rows(), u);
  for (auto* l : {&p.encoder_fwd, &p.encoder_bwd, &p.decoder}) {
    l->input = Matrix::Zero(4 * h, d);
    l->recurrent = Matrix::Zero(4 * h, h);
    l->bias = Matrix::Zero(4 * h, 1);
  }
  p.attention = Matrix::Zero(h, 2 * h);
  p.context_enc = Matrix::Zero(h, 2 * h);
  p.context_dec = Matrix::Zero(h, h);
  p.context_bias = Matrix::Zero(h, 1);
  p.out_char = Matrix::Zero(no, d);
  p.out_context = Matrix::Zero(no, h);
  p.out_bias = Matrix::Zero(no, 1);
  return p;
}

/// Fresh parameters, every entry uniform in [-0.1, 0.1]. Deterministic in
/// `seed`.
template <typename Scalar = double>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto p = shaped_params<Scalar>(config);
  Rng rng = make_rng(seed, {0x1417});
  p.for_each([&](std::string_view, MatrixT<Scalar>& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        m(r, c) = static_cast<Scalar>(0.2 * uniform01(rng) - 0.1);
  });
  return p;
}

/// Character embedding matrix of one language: W_x U or W_y U.
template <typename Scalar>
MatrixT<Scalar> embed(const ModelParams<Scalar>& params, Language language) {
  const auto& w = language == Language::lost ? params.lost_weights : params.known_weights;
  if (w.cols() != params.universal.rows())
    throw ConfigError("language weight matrix has " + std::to_string(w.cols()) +
                      " columns but the universal inventory has " +
                      std::to_string(params.universal.rows()) + " rows");
  return w * params.universal;
}

// ---------------------------------------------------------------------------
// Regularizers

/// Omega1 = sum_t (p_t - p_{t-1} - 1)^2, Omega2 = sum_t (p_t - p_{t-2} - 1)^2,
/// over steps where both positions exist.
inline double alignment_penalty(std::span<const double> positions, Regularizer variant) {
  const std::size_t lag = variant == Regularizer::omega1 ? 1 : 2;
  double total = 0.0;
  for (std::size_t t = lag; t < positions.size(); ++t) {
    const double e = positions[t] - positions[t - lag] - 1.0;
    total += e * e;
  }
  return total;
}

/// d penalty / d p_t, scaled by `weight`, accumulated into `grad`.
inline void alignment_penalty_grad(std::span<const double> positions, Regularizer variant,
                                   double weight, std::span<double> grad) {
  const std::size_t lag = variant == Regularizer::omega1 ? 1 : 2;
  for (std::size_t t = lag; t < positions.size(); ++t) {
    const double e = 2.0 * weight * (positions[t] - positions[t - lag] - 1.0);
    grad[t] += e;
    grad[t - lag] -= e;
  }
}

/// Norm control: g = min(r |c| / |h~|, 1). A zero context vector counts as
/// saturated (g = 1).
inline double norm_gate(double c_norm, double h_norm, double ratio) {
  if (!(h_norm > 0.0)) return 1.0;
  return std::min(ratio * c_norm / h_norm, 1.0);
}

/// In-place softmax of every column, max-shifted.
template <typename Derived>
void softmax_columns(Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    auto col = m.col(t);
    col = (col.array() - col.maxCoeff()).exp().matrix();
    col /= col.sum();
  }
}

// ---------------------------------------------------------------------------
// Forward structures

/// Per-pair quantities of a teacher-forced (or free-running) decode.
template <typename Scalar>
struct ForwardTrace {
  MatrixT<Scalar> attention;  // n x steps; column t is Pr(a^t = k | x)
  MatrixT<Scalar> context;    // h x steps; h~ per step
  MatrixT<Scalar> chars;      // d x steps; attended embedding c per step
  MatrixT<Scalar> probs;      // n_o x steps; output distribution per step
  std::vector<double> positions;  // expected alignment position per step
  std::vector<double> gate;       // norm-control factor g per step
  std::vector<double> log_probs;  // log Pr(target_t) per step (teacher forced)
  std::vector<int> targets;       // y_0 .. y_{m-1}, EOS
  double log_likelihood = 0.0;

  std::size_t steps() const { return positions.size(); }

  /// Positions of the steps that emit real symbols (excludes the EOS step).
  std::span<const double> symbol_positions() const {
    return {positions.data(), positions.empty() ? 0 : positions.size() - 1};
  }
};

/// Encoder-side cache for one lost word.
template <typename Scalar>
struct EncodedSource {
  Word word;
  MatrixT<Scalar> chars;     // d x n, E_x(x_k)
  MatrixT<Scalar> states;    // 2h x n, [fwd; bwd]
  MatrixT<Scalar> keys;      // h x n, A enc_k
  MatrixT<Scalar> ctx_proj;  // h x n, Wc_enc enc_k
  MatrixT<Scalar> out_proj;  // n_o x n, W_out_char E_x(x_k)
  LstmTrace<Scalar> fwd, bwd;
};

/// Decoder-side cache for one known word under teacher forcing.
template <typename Scalar>
struct DecodedTarget {
  Word word;
  std::vector<int> targets;  // word + EOS
  MatrixT<Scalar> states;    // h x (m+1)
  MatrixT<Scalar> ctx_dec;   // h x (m+1), Wc_dec s_t + bc
  LstmTrace<Scalar> lstm;
};

/// Gradient accumulators for an encoded source / decoded target.
template <typename Scalar>
struct SourceGrad {
  MatrixT<Scalar> chars, keys, ctx_proj, out_proj;
};
template <typename Scalar>
struct TargetGrad {
  MatrixT<Scalar> states, ctx_dec;
};

struct DecodeResult {
  Word word;
  bool truncated = false;  // max length reached before EOS
};

/// One weighted (lost, known) pair of a training batch; `flow` is f(i,j).
struct WeightedPair {
  std::size_t lost = 0;
  std::size_t known = 0;
  double flow = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  double nll = 0.0;
  double penalty = 0.0;  // lambda-weighted regularizer part
  std::size_t words = 0;
  std::size_t pairs = 0;
};

/// Stateless evaluator bound to a parameter set. Read-only on `params`, so
/// independent instances may run concurrently.
template <typename Scalar = double>
class Seq2Seq {
 public:
  using Matrix = MatrixT<Scalar>;
  using Vector = VectorT<Scalar>;
  using Params = ModelParams<Scalar>;

  Seq2Seq(const Params& params, const ModelConfig& config)
      : p_(params), cfg_(config), lost_emb_(embed(params, Language::lost)),
        known_emb_(embed(params, Language::known)) {
    cfg_.validate();
    if (p_.lost_weights.rows() != cfg_.lost_rows() || p_.known_weights.rows() != cfg_.known_rows() ||
        p_.out_bias.rows() != cfg_.output_size() || p_.universal.cols() != cfg_.embedding_dim ||
        p_.decoder.hidden() != cfg_.hidden_dim)
      throw ConfigError("parameter shapes do not match the model config");
  }

  const ModelConfig& config() const { return cfg_; }
  const Params& params() const { return p_; }

  EncodedSource<Scalar> encode(const Word& x) const {
    if (x.empty()) throw InputError("cannot encode an empty word");
    const auto n = static_cast<Eigen::Index>(x.size());
    EncodedSource<Scalar> src;
    src.word = x;
    src.chars.resize(cfg_.embedding_dim, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const int id = x[static_cast<std::size_t>(k)];
      if (id < 0 || id >= cfg_.lost_rows()) throw InputError("lost symbol id out of range");
      src.chars.col(k) = lost_emb_.row(id).transpose();
    }
    src.fwd = lstm_forward(p_.encoder_fwd, src.chars, false);
    src.bwd = lstm_forward(p_.encoder_bwd, src.chars, true);
    const auto h = cfg_.hidden_dim;
    src.states.resize(2 * h, n);
    src.states.topRows(h) = src.fwd.hidden;
    src.states.bottomRows(h) = src.bwd.hidden;
    src.keys = p_.attention * src.states;
    src.ctx_proj = p_.context_enc * src.states;
    src.out_proj = p_.out_char * src.chars;
    return src;
  }

  DecodedTarget<Scalar> decode_teacher(const Word& y) const {
    if (y.empty()) throw InputError("cannot score an empty target word");
    DecodedTarget<Scalar> tgt;
    tgt.word = y;
    tgt.targets = y;
    tgt.targets.push_back(cfg_.eos());
    const auto steps = static_cast<Eigen::Index>(tgt.targets.size());
    Matrix inputs(cfg_.embedding_dim, steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const int prev = t == 0 ? cfg_.bos() : y[static_cast<std::size_t>(t - 1)];
      if (prev < 0 || prev >= cfg_.known_rows() || (t > 0 && prev >= cfg_.known_symbols))
        throw InputError("known symbol id out of range");
      inputs.col(t) = known_emb_.row(prev).transpose();
    }
    tgt.lstm = lstm_forward(p_.decoder, inputs, false);
    tgt.states = tgt.lstm.hidden;
    tgt.ctx_dec = p_.context_dec * tgt.states;
    tgt.ctx_dec.colwise() += p_.context_bias.col(0);
    return tgt;
  }

  /// Attention and output distribution for one decoder state.
  struct Step {
    Vector alpha, context, chars, logits, probs;
    double gate = 1.0;
    bool clamped = true;
    double position = 0.0;
  };

  Step step(const EncodedSource<Scalar>& src, const Vector& state, const Vector& ctx_dec) const {
    Step s;
    const Vector scores = src.keys.transpose() * state;
    s.alpha = (scores.array() - scores.maxCoeff()).exp().matrix();
    s.alpha /= s.alpha.sum();
    double pos = 0.0;
    for (Eigen::Index k = 0; k < s.alpha.size(); ++k) pos += static_cast<double>(k) * static_cast<double>(s.alpha(k));
    s.position = pos;
    s.context = (src.ctx_proj * s.alpha + ctx_dec).array().tanh().matrix();
    s.chars = src.chars * s.alpha;
    s.gate = norm_gate(static_cast<double>(s.chars.norm()), static_cast<double>(s.context.norm()),
                       cfg_.norm_ratio);
    s.clamped = s.gate >= 1.0;
    s.logits = src.out_proj * s.alpha + static_cast<Scalar>(s.gate) * (p_.out_context * s.context) +
               p_.out_bias.col(0);
    const Scalar mx = s.logits.maxCoeff();
    s.probs = (s.logits.array() - mx).exp().matrix();
    s.probs /= s.probs.sum();
    return s;
  }

  /// Teacher-forced log Pr(y | x) with the full per-step trace. Same
  /// arithmetic as `step`, done for all steps at once.
  ForwardTrace<Scalar> score(const EncodedSource<Scalar>& src, const DecodedTarget<Scalar>& tgt) const {
    const auto steps = static_cast<Eigen::Index>(tgt.targets.size());
    const auto n = static_cast<Eigen::Index>(src.word.size());
    ForwardTrace<Scalar> tr;
    tr.targets = tgt.targets;
    tr.attention.noalias() = src.keys.transpose() * tgt.states;
    softmax_columns(tr.attention);
    tr.context.noalias() = src.ctx_proj * tr.attention;
    tr.context = (tr.context + tgt.ctx_dec).array().tanh().matrix();
    tr.chars.noalias() = src.chars * tr.attention;
    tr.probs.noalias() = src.out_proj * tr.attention;
    Matrix ctx_out = p_.out_context * tr.context;
    tr.positions.resize(static_cast<std::size_t>(steps));
    tr.gate.resize(static_cast<std::size_t>(steps));
    tr.log_probs.resize(static_cast<std::size_t>(steps));
    for (Eigen::Index t = 0; t < steps; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      double pos = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) pos += static_cast<double>(k) * static_cast<double>(tr.attention(k, t));
      tr.positions[ut] = pos;
      tr.gate[ut] = norm_gate(static_cast<double>(tr.chars.col(t).norm()),
                              static_cast<double>(tr.context.col(t).norm()), cfg_.norm_ratio);
      tr.probs.col(t) += static_cast<Scalar>(tr.gate[ut]) * ctx_out.col(t);
    }
    tr.probs.colwise() += p_.out_bias.col(0);
    softmax_columns(tr.probs);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      const double lp = std::log(static_cast<double>(tr.probs(tgt.targets[ut], t)));
      tr.log_probs[ut] = lp;
      tr.log_likelihood += lp;
    }
    return tr;
  }

  ForwardTrace<Scalar> forward(const Word& x, const Word& y) const {
    return score(encode(x), decode_teacher(y));
  }

  double penalty(const ForwardTrace<Scalar>& tr) const {
    return alignment_penalty(tr.symbol_positions(), cfg_.regularizer);
  }

  /// Backward through one pair. `d_loglik` is dLoss/d log Pr(y|x) and
  /// `penalty_weight` multiplies the alignment penalty in the loss.
  void backward_pair(const EncodedSource<Scalar>& src, const DecodedTarget<Scalar>& tgt,
                     const ForwardTrace<Scalar>& tr, double d_loglik, double penalty_weight,
                     SourceGrad<Scalar>& gs, TargetGrad<Scalar>& gt, Params& grad) const {
    const auto steps = static_cast<Eigen::Index>(tr.steps());
    const auto n = static_cast<Eigen::Index>(src.word.size());
    std::vector<double> d_pos(static_cast<std::size_t>(steps), 0.0);
    if (penalty_weight != 0.0) {
      const auto sym = tr.symbol_positions();
      alignment_penalty_grad(sym, cfg_.regularizer, penalty_weight,
                             std::span<double>(d_pos.data(), sym.size()));
    }
    const Scalar r = static_cast<Scalar>(cfg_.norm_ratio);
    const Scalar G = static_cast<Scalar>(d_loglik);
    const auto& A = tr.attention;

    // Columns are steps throughout.
    Matrix dlogits = -G * tr.probs;
    Matrix gated = tr.context;
    for (Eigen::Index t = 0; t < steps; ++t) {
      dlogits(tr.targets[static_cast<std::size_t>(t)], t) += G;
      gated.col(t) *= static_cast<Scalar>(tr.gate[static_cast<std::size_t>(t)]);
    }
    grad.out_bias.col(0) += dlogits.rowwise().sum();
    grad.out_context.noalias() += dlogits * gated.transpose();
    const Matrix du = p_.out_context.transpose() * dlogits;
    Matrix dalpha = src.out_proj.transpose() * dlogits;
    gs.out_proj.noalias() += dlogits * A.transpose();

    Matrix dh = du;
    Matrix dc = Matrix::Zero(cfg_.embedding_dim, steps);
    bool any_dc = false;
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Scalar g = static_cast<Scalar>(tr.gate[static_cast<std::size_t>(t)]);
      if (g >= Scalar(1)) continue;
      const auto htil = tr.context.col(t);
      const Scalar nh = htil.norm(), nc = tr.chars.col(t).norm();
      const Scalar proj = htil.dot(du.col(t)) / nh;
      dh.col(t) = g * (du.col(t) - htil * (proj / nh));
      if (nc > Scalar(0)) {
        dc.col(t) = (r * proj / nc) * tr.chars.col(t);
        any_dc = true;
      }
    }
    if (any_dc) {
      dalpha.noalias() += src.chars.transpose() * dc;
      gs.chars.noalias() += dc * A.transpose();
    }
    const Matrix dpre = dh.cwiseProduct((Scalar(1) - tr.context.array().square()).matrix());
    gt.ctx_dec += dpre;
    dalpha.noalias() += src.ctx_proj.transpose() * dpre;
    gs.ctx_proj.noalias() += dpre * A.transpose();

    for (Eigen::Index t = 0; t < steps; ++t) {
      const double dp = d_pos[static_cast<std::size_t>(t)];
      if (dp != 0.0)
        for (Eigen::Index k = 0; k < n; ++k) dalpha(k, t) += static_cast<Scalar>(dp * static_cast<double>(k));
    }
    Matrix dscore = dalpha;
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Scalar mean = A.col(t).dot(dalpha.col(t));
      dscore.col(t) = A.col(t).cwiseProduct((dalpha.col(t).array() - mean).matrix());
    }
    gt.states.noalias() += src.keys * dscore;
    gs.keys.noalias() += tgt.states * dscore.transpose();
  }

  SourceGrad<Scalar> source_grad(const EncodedSource<Scalar>& src) const {
    const auto n = static_cast<Eigen::Index>(src.word.size());
    return {Matrix::Zero(cfg_.embedding_dim, n), Matrix::Zero(cfg_.hidden_dim, n),
            Matrix::Zero(cfg_.hidden_dim, n), Matrix::Zero(cfg_.output_size(), n)};
  }
  TargetGrad<Scalar> target_grad(const DecodedTarget<Scalar>& tgt) const {
    const auto steps = static_cast<Eigen::Index>(tgt.targets.size());
    return {Matrix::Zero(cfg_.hidden_dim, steps), Matrix::Zero(cfg_.hidden_dim, steps)};
  }

  /// Pushes accumulated source gradients through the encoder into `grad`
  /// and the lost embedding gradient `d_lost_emb` (n_x x d).
  void backward_source(const EncodedSource<Scalar>& src, const SourceGrad<Scalar>& gs, Params& grad,
                       Matrix& d_lost_emb) const {
    const auto h = cfg_.hidden_dim;
    Matrix d_states = p_.attention.transpose() * gs.keys + p_.context_enc.transpose() * gs.ctx_proj;
    grad.attention.noalias() += gs.keys * src.states.transpose();
    grad.context_enc.noalias() += gs.ctx_proj * src.states.transpose();
    grad.out_char.noalias() += gs.out_proj * src.chars.transpose();
    Matrix d_chars = gs.chars + p_.out_char.transpose() * gs.out_proj;
    d_chars += lstm_backward(p_.encoder_fwd, src.fwd, Matrix(d_states.topRows(h)), grad.encoder_fwd);
    d_chars += lstm_backward(p_.encoder_bwd, src.bwd, Matrix(d_states.bottomRows(h)), grad.encoder_bwd);
    for (Eigen::Index k = 0; k < d_chars.cols(); ++k)
      d_lost_emb.row(src.word[static_cast<std::size_t>(k)]) += d_chars.col(k).transpose();
  }

  void backward_target(const DecodedTarget<Scalar>& tgt, const TargetGrad<Scalar>& gt, Params& grad,
                       Matrix& d_known_emb) const {
    Matrix d_states = gt.states + p_.context_dec.transpose() * gt.ctx_dec;
    grad.context_dec.noalias() += gt.ctx_dec * tgt.states.transpose();
    grad.context_bias.col(0) += gt.ctx_dec.rowwise().sum();
    const Matrix d_inputs = lstm_backward(p_.decoder, tgt.lstm, d_states, grad.decoder);
    for (Eigen::Index t = 0; t < d_inputs.cols(); ++t) {
      const int prev = t == 0 ? cfg_.bos() : tgt.word[static_cast<std::size_t>(t - 1)];
      d_known_emb.row(prev) += d_inputs.col(t).transpose();
    }
  }

  /// Routes embedding-matrix gradients into U, W_x and W_y.
  void backward_embeddings(const Matrix& d_lost_emb, const Matrix& d_known_emb, Params& grad) const {
    grad.universal.noalias() += p_.lost_weights.transpose() * d_lost_emb;
    grad.universal.noalias() += p_.known_weights.transpose() * d_known_emb;
    grad.lost_weights.noalias() += d_lost_emb * p_.universal.transpose();
    grad.known_weights.noalias() += d_known_emb * p_.universal.transpose();
  }

  /// Flow-weighted mixture loss
  ///   sum_j [ -log sum_i f(i,j) Pr(y_j | x_i) + lambda sum_{i: f>0} Omega(i,j) ]
  /// and, when `grad` is non-null, its exact gradient (accumulated).
  LossBreakdown mixture_loss(std::span<const Word> lost, std::span<const Word> known,
                             std::span<const WeightedPair> pairs, Params* grad) const {
    // Group contributing pairs by known word.
    std::vector<std::size_t> order;
    order.reserve(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].flow < 0.0) throw ConfigError("flow weights must be nonnegative");
      if (pairs[k].lost >= lost.size() || pairs[k].known >= known.size())
        throw ConfigError("pair index out of range");
      if (pairs[k].flow > 0.0) order.push_back(k);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[a].known < pairs[b].known; });

    std::unordered_map<std::size_t, std::size_t> src_slot;
    std::vector<EncodedSource<Scalar>> sources;
    std::vector<SourceGrad<Scalar>> sgrads;
    for (auto k : order) {
      const auto i = pairs[k].lost;
      if (src_slot.emplace(i, sources.size()).second) {
        sources.push_back(encode(lost[i]));
        if (grad) sgrads.push_back(source_grad(sources.back()));
      }
    }

    Matrix d_lost_emb, d_known_emb;
    if (grad) {
      d_lost_emb = Matrix::Zero(cfg_.lost_rows(), cfg_.embedding_dim);
      d_known_emb = Matrix::Zero(cfg_.known_rows(), cfg_.embedding_dim);
    }

    LossBreakdown out;
    std::vector<ForwardTrace<Scalar>> traces;
    std::vector<double> logits;
    for (std::size_t a = 0; a < order.size();) {
      std::size_t b = a;
      const auto j = pairs[order[a]].known;
      while (b < order.size() && pairs[order[b]].known == j) ++b;

      const auto tgt = decode_teacher(known[j]);
      traces.clear();
      logits.clear();
      // Each pair's penalty is weighted by its share of the known word's
      // flow, so the term does not grow with the number of candidates.
      double flow_sum = 0.0;
      for (std::size_t q = a; q < b; ++q) flow_sum += pairs[order[q]].flow;
      double penalty = 0.0;
      for (std::size_t q = a; q < b; ++q) {
        const auto& pr = pairs[order[q]];
        traces.push_back(score(sources[src_slot[pr.lost]], tgt));
        logits.push_back(std::log(pr.flow) + traces.back().log_likelihood);
        penalty += pr.flow / flow_sum * this->penalty(traces.back());
      }
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double l : logits) z += std::exp(l - mx);
      const double log_mix = mx + std::log(z);
      out.nll += -log_mix;
      out.penalty += cfg_.lambda * penalty;
      out.words += 1;
      out.pairs += b - a;

      if (grad) {
        auto gt = target_grad(tgt);
        for (std::size_t q = a; q < b; ++q) {
          const auto& pr = pairs[order[q]];
          const auto slot = src_slot[pr.lost];
          const double posterior = std::exp(logits[q - a] - log_mix);
          backward_pair(sources[slot], tgt, traces[q - a], -posterior, cfg_.lambda * pr.flow / flow_sum, sgrads[slot], gt,
                        *grad);
        }
        backward_target(tgt, gt, *grad, d_known_emb);
      }
      a = b;
    }
    if (grad) {
      for (std::size_t s = 0; s < sources.size(); ++s) backward_source(sources[s], sgrads[s], *grad, d_lost_emb);
      backward_embeddings(d_lost_emb, d_known_emb, *grad);
    }
    out.total = out.nll + out.penalty;
    return out;
  }

  /// Ancestral sample (or greedy decode when `rng` is null).
  DecodeResult generate(const EncodedSource<Scalar>& src, Rng* rng) const {
    DecodeResult out;
    const auto h = cfg_.hidden_dim;
    Vector state = Vector::Zero(h), cell = Vector::Zero(h);
    Vector gates(4 * h), c_new(h), h_new(h);
    int prev = cfg_.bos();
    for (int t = 0; t < cfg_.max_decode_length; ++t) {
      const Vector pre = p_.decoder.input * known_emb_.row(prev).transpose();
      lstm_step<Scalar>(p_.decoder, pre, state, cell, gates, c_new, h_new);
      state = h_new;
      cell = c_new;
      const Vector ctx_dec = p_.context_dec * state + p_.context_bias.col(0);
      const Step s = step(src, state, ctx_dec);
      int sym = 0;
      if (rng) {
        sym = static_cast<int>(sample_discrete(*rng, std::span<const Scalar>(s.probs.data(), static_cast<std::size_t>(s.probs.size()))));
      } else {
        Eigen::Index best = 0;
        s.probs.maxCoeff(&best);
        sym = static_cast<int>(best);
      }
      if (sym == cfg_.eos()) return out;
      out.word.push_back(sym);
      prev = sym;
    }
    out.truncated = true;
    return out;
  }

  DecodeResult greedy_decode(const Word& x) const { return generate(encode(x), nullptr); }

  /// M ancestral samples; deterministic in `seed`.
  std::vector<Word> sample(const Word& x, int count, std::uint64_t seed) const {
    if (count < 1) throw ConfigError("sample count must be at least 1");
    const auto src = encode(x);
    Rng rng = make_rng(seed, {0x5a3b});
    std::vector<Word> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int m = 0; m < count; ++m) out.push_back(generate(src, &rng).word);
    return out;
  }

 private:
  const Params& p_;
  ModelConfig cfg_;
  Matrix lost_emb_, known_emb_;
};

// ---------------------------------------------------------------------------
// Free-function surface

template <typename Scalar>
std::pair<double, ForwardTrace<Scalar>> forward(const ModelParams<Scalar>& params, const ModelConfig& config,
                                                const Word& x, const Word& y) {
  auto tr = Seq2Seq<Scalar>(params, config).forward(x, y);
  const double ll = tr.log_likelihood;
  return {ll, std::move(tr)};
}

inline double regularizer(std::span<const double> positions, Regularizer variant) {
  return alignment_penalty(positions, variant);
}

template <typename Scalar>
LossBreakdown loss(const ModelParams<Scalar>& params, const ModelConfig& config, std::span<const Word> lost,
                   std::span<const Word> known, std::span<const WeightedPair> pairs) {
  return Seq2Seq<Scalar>(params, config).mixture_loss(lost, known, pairs, nullptr);
}

template <typename Scalar>
struct GradientResult {
  LossBreakdown loss;
  ModelParams<Scalar> grad;
};

/// Exact gradient of the mixture loss. Throws NumericError naming the first
/// non-finite tensor.
template <typename Scalar>
GradientResult<Scalar> gradients(const ModelParams<Scalar>& params, const ModelConfig& config,
                                 std::span<const Word> lost, std::span<const Word> known,
                                 std::span<const WeightedPair> pairs) {
  GradientResult<Scalar> out{{}, params.zeros_like()};
  out.loss = Seq2Seq<Scalar>(params, config).mixture_loss(lost, known, pairs, &out.grad);
  if (!std::isfinite(out.loss.total)) throw NumericError("loss", "non-finite loss");
  out.grad.for_each([](std::string_view name, const MatrixT<Scalar>& m) {
    if (!m.allFinite()) throw NumericError(std::string(name), "non-finite gradient in " + std::string(name));
  });
  return out;
}

template <typename Scalar>
std::vector<Word> sample(const ModelParams<Scalar>& params, const ModelConfig& config, const Word& x, int count,
                         std::uint64_t seed) {
  return Seq2Seq<Scalar>(params, config).sample(x, count, seed);
}

template <typename Scalar>
DecodeResult greedy_decode(const ModelParams<Scalar>& params, const ModelConfig& config, const Word& x) {
  return Seq2Seq<Scalar>(params, config).greedy_decode(x);
}

}  // namespace decipher
