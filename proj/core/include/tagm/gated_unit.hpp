// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tagm/numerics.hpp"
#include "tagm/params.hpp"

namespace tagm {

/// Recurrent attention-gated unit:
///   h'_t = relu(W·h_{t-1} + U·x_t + b)
///   h_t  = (1 - a_t)·h_{t-1} + a_t·h'_t
struct CellParams {
  Matrix W;  // H_c x H_c, recurrent
  Matrix U;  // H_c x D, input
  Vector b;  // H_c

  CellParams() = default;
  CellParams(std::size_t input_dim, std::size_t hidden)
      : W(hidden, hidden), U(hidden, input_dim), b(hidden) {}

  std::size_t input_dim() const { return U.cols(); }
  std::size_t hidden() const { return U.rows(); }
  std::size_t param_count() const { return W.size() + U.size() + b.size(); }

  void initialize(std::mt19937_64& rng);
  void validate() const;

  template <typename F>
  void for_each_tensor(F&& f) {
    f(TensorRef{"cell.W", W.values()});
    f(TensorRef{"cell.U", U.values()});
    f(TensorRef{"cell.b", b.values()});
  }

  friend bool operator==(const CellParams&, const CellParams&) = default;
};

struct CellTrace {
  Vector h0;
  std::vector<Vector> pre;        // W·h_{t-1} + U·x_t + b
  std::vector<Vector> candidate;  // h'_t
  std::vector<Vector> hidden;     // h_t

  std::size_t length() const { return hidden.size(); }
  /// h_T, the sequence representation.
  const Vector& final_state() const { return hidden.empty() ? h0 : hidden.back(); }
};

struct CellGradients {
  CellParams params;
  Vector gates;    // d/d a_t
  Matrix inputs;   // T x D
};

/// Gates are consumed as given; values outside [0, 1] are rejected.
CellTrace cell_forward(const Matrix& x, const Vector& a, const CellParams& p);

/// Backpropagates grad_hT·h_T.
CellGradients cell_backward(const Matrix& x, const Vector& a, const CellParams& p,
                            const CellTrace& trace, const Vector& grad_hT);

}  // namespace tagm
