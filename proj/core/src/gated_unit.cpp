// SPDX-License-Identifier: Apache-2.0
#include "tagm/gated_unit.hpp"

#include <algorithm>

#include "tagm/error.hpp"

namespace tagm {

void CellParams::initialize(std::mt19937_64& rng) {
  glorot_uniform(W, rng);
  glorot_uniform(U, rng);
  b.fill(0.0);
}

void CellParams::validate() const {
  const std::size_t h = hidden();
  if (W.rows() != h || W.cols() != h || b.size() != h) {
    throw ShapeError("CellParams: inconsistent tensor shapes");
  }
}

CellTrace cell_forward(const Matrix& x, const Vector& a, const CellParams& p) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden();
  if (a.size() != T) {
    throw ShapeError("cell_forward: " + std::to_string(a.size()) + " gates for a sequence of length " +
                     std::to_string(T));
  }
  if (x.cols() != p.input_dim()) {
    throw ShapeError("cell_forward: sequence dimension " + std::to_string(x.cols()) +
                     " does not match cell input dimension " + std::to_string(p.input_dim()));
  }
  p.validate();
  for (std::size_t t = 0; t < T; ++t) {
    if (!(a[t] >= 0.0 && a[t] <= 1.0)) {
      throw Error("cell_forward: gate a[" + std::to_string(t) + "] = " + std::to_string(a[t]) +
                  " outside [0, 1]");
    }
  }

  CellTrace tr;
  tr.h0 = Vector(H);
  tr.pre.reserve(T);
  tr.candidate.reserve(T);
  tr.hidden.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Vector& prev = t == 0 ? tr.h0 : tr.hidden[t - 1];
    Vector z = affine(p.U, x.row(t), p.b);
    axpy(1.0, matvec(p.W, prev.values()).values(), z.values());
    Vector cand = relu(z);
    Vector h(H);
    const double gate = a[t];
    for (std::size_t i = 0; i < H; ++i) {
      const double lo = std::min(prev[i], cand[i]);
      const double hi = std::max(prev[i], cand[i]);
      // rounding may step one ulp outside the segment; the convex
      // combination itself never does
      h[i] = std::clamp((1.0 - gate) * prev[i] + gate * cand[i], lo, hi);
    }
    tr.pre.push_back(std::move(z));
    tr.candidate.push_back(std::move(cand));
    tr.hidden.push_back(std::move(h));
  }
  return tr;
}

CellGradients cell_backward(const Matrix& x, const Vector& a, const CellParams& p,
                            const CellTrace& trace, const Vector& grad_hT) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden();
  if (a.size() != T || trace.length() != T || grad_hT.size() != H) {
    throw ShapeError("cell_backward: gates/trace/upstream gradient do not match the sequence");
  }
  CellGradients g{CellParams(p.input_dim(), H), Vector(T), Matrix(T, x.cols())};

  Vector dh = grad_hT;
  Vector dz(H);
  for (std::size_t t = T; t-- > 0;) {
    const Vector& prev = t == 0 ? trace.h0 : trace.hidden[t - 1];
    const double gate = a[t];
    double dgate = 0.0;
    for (std::size_t i = 0; i < H; ++i) {
      dgate += dh[i] * (trace.candidate[t][i] - prev[i]);
      dz[i] = gate * dh[i] * relu_grad(trace.pre[t][i]);
    }
    g.gates[t] = dgate;
    add_outer(g.params.W, dz.values(), prev.values());
    add_outer(g.params.U, dz.values(), x.row(t));
    axpy(1.0, dz.values(), g.params.b.values());
    add_transposed_matvec(p.U, dz.values(), g.inputs.row(t));

    Vector next(H);
    for (std::size_t i = 0; i < H; ++i) next[i] = (1.0 - gate) * dh[i];
    add_transposed_matvec(p.W, dz.values(), next.values());
    dh = std::move(next);
  }
  return g;
}

}  // namespace tagm
