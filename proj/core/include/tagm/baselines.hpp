// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tagm/attention.hpp"
#include "tagm/numerics.hpp"
#include "tagm/params.hpp"

namespace tagm {

/// Plain ReLU RNN: h_t = relu(W·x_t + U·h_{t-1} + b), h_0 = 0.
struct RnnParams {
  Matrix W;  // H x D
  Matrix U;  // H x H
  Vector b;  // H

  RnnParams() = default;
  RnnParams(std::size_t input_dim, std::size_t hidden)
      : W(hidden, input_dim), U(hidden, hidden), b(hidden) {}

  std::size_t input_dim() const { return W.cols(); }
  std::size_t hidden() const { return W.rows(); }
  std::size_t param_count() const { return W.size() + U.size() + b.size(); }

  void initialize(std::mt19937_64& rng);

  template <typename F>
  void for_each_tensor(F&& f) {
    f(TensorRef{"rnn.W", W.values()});
    f(TensorRef{"rnn.U", U.values()});
    f(TensorRef{"rnn.b", b.values()});
  }

  friend bool operator==(const RnnParams&, const RnnParams&) = default;
};

struct RnnTrace {
  std::vector<Vector> pre;
  std::vector<Vector> hidden;
  Vector h0;

  const Vector& final_state() const { return hidden.empty() ? h0 : hidden.back(); }
};

struct RnnGradients {
  RnnParams params;
  Matrix inputs;
};

RnnTrace plain_rnn_forward(const Matrix& x, const RnnParams& p);
RnnGradients plain_rnn_backward(const Matrix& x, const RnnParams& p, const RnnTrace& trace,
                                const Vector& grad_hT);

/// Feed-forward layer of the attention + NN baseline: h = relu(W·v + b)
/// where v = sum_t a_t·x_t.
struct FeedForwardParams {
  Matrix W;  // H x D
  Vector b;  // H

  FeedForwardParams() = default;
  FeedForwardParams(std::size_t input_dim, std::size_t hidden) : W(hidden, input_dim), b(hidden) {}

  std::size_t input_dim() const { return W.cols(); }
  std::size_t hidden() const { return W.rows(); }
  std::size_t param_count() const { return W.size() + b.size(); }

  void initialize(std::mt19937_64& rng);

  template <typename F>
  void for_each_tensor(F&& f) {
    f(TensorRef{"ff.W", W.values()});
    f(TensorRef{"ff.b", b.values()});
  }

  friend bool operator==(const FeedForwardParams&, const FeedForwardParams&) = default;
};

struct AmnnTrace {
  AttentionTrace attention;
  Vector pooled;  // v
  Vector pre;     // W·v + b
  Vector hidden;  // h
};

struct AmnnGradients {
  AttentionParams attention;
  FeedForwardParams ff;
  Matrix inputs;
};

/// Attention-weighted pooling followed by one ReLU layer.
AmnnTrace amnn_forward(const Matrix& x, const AttentionParams& attention,
                       const FeedForwardParams& ff);

/// Attention-weighted sum of the rows of x.
Vector attention_pool(const Matrix& x, const Vector& a);

AmnnGradients amnn_backward(const Matrix& x, const AttentionParams& attention,
                            const FeedForwardParams& ff, const AmnnTrace& trace,
                            const Vector& grad_h);

}  // namespace tagm
