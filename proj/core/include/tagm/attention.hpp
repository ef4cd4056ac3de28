// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tagm/numerics.hpp"
#include "tagm/params.hpp"

namespace tagm {

/// Temporal attention module: a bi-directional ReLU RNN whose two hidden
/// streams are fused into one sigmoid salience score per timestep.
struct AttentionParams {
  Matrix fwd_W;    // H_a x D
  Matrix fwd_U;    // H_a x H_a
  Vector fwd_b;    // H_a
  Matrix bwd_W;    // H_a x D
  Matrix bwd_U;    // H_a x H_a
  Vector bwd_b;    // H_a
  Vector fusion_m; // 2·H_a, forward half first
  Vector fusion_b; // length 1

  AttentionParams() = default;
  /// Zero-filled bundle for (input_dim, hidden).
  AttentionParams(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const { return fwd_W.cols(); }
  std::size_t hidden() const { return fwd_W.rows(); }
  std::size_t param_count() const;

  /// Glorot weights, zero biases, zero fusion bias.
  void initialize(std::mt19937_64& rng);

  /// Throws ShapeError unless every tensor agrees with (input_dim, hidden).
  void validate() const;

  template <typename F>
  void for_each_tensor(F&& f) {
    f(TensorRef{"attention.fwd_W", fwd_W.values()});
    f(TensorRef{"attention.fwd_U", fwd_U.values()});
    f(TensorRef{"attention.fwd_b", fwd_b.values()});
    f(TensorRef{"attention.bwd_W", bwd_W.values()});
    f(TensorRef{"attention.bwd_U", bwd_U.values()});
    f(TensorRef{"attention.bwd_b", bwd_b.values()});
    f(TensorRef{"attention.fusion_m", fusion_m.values(), true});
    f(TensorRef{"attention.fusion_b", fusion_b.values(), true});
  }

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

/// Everything attention_forward computes, kept for backpropagation.
struct AttentionTrace {
  Vector a;                 // T salience scores in [0, 1]
  Vector logits;            // T pre-sigmoid fused scores
  std::vector<Vector> fwd_pre, fwd_h;  // T entries each, index t = timestep t
  std::vector<Vector> bwd_pre, bwd_h;

  std::size_t length() const { return a.size(); }
};

struct AttentionGradients {
  AttentionParams params;
  Matrix inputs;  // T x D
};

/// Runs both recurrences (zero initial states) and the fusion layer.
/// `x` holds one observation per row. Throws ShapeError on mismatch or T = 0.
AttentionTrace attention_forward(const Matrix& x, const AttentionParams& p);

/// Backpropagates sum_t grad_a[t]·a_t through the module.
AttentionGradients attention_backward(const Matrix& x, const AttentionParams& p,
                                      const AttentionTrace& trace, const Vector& grad_a);

}  // namespace tagm
