// SPDX-License-Identifier: Apache-2.0
#include "tagm/attention.hpp"

#include <cmath>

#include "tagm/error.hpp"

namespace tagm {

void glorot_uniform(Matrix& m, std::mt19937_64& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& v : m.values()) v = dist(rng);
}

AttentionParams::AttentionParams(std::size_t input_dim, std::size_t hidden)
    : fwd_W(hidden, input_dim),
      fwd_U(hidden, hidden),
      fwd_b(hidden),
      bwd_W(hidden, input_dim),
      bwd_U(hidden, hidden),
      bwd_b(hidden),
      fusion_m(2 * hidden),
      fusion_b(1) {}

std::size_t AttentionParams::param_count() const {
  const std::size_t h = hidden(), d = input_dim();
  return 2 * (h * d + h * h + h) + (2 * h + 1);
}

void AttentionParams::initialize(std::mt19937_64& rng) {
  glorot_uniform(fwd_W, rng);
  glorot_uniform(fwd_U, rng);
  fwd_b.fill(0.0);
  glorot_uniform(bwd_W, rng);
  glorot_uniform(bwd_U, rng);
  bwd_b.fill(0.0);
  // fusion_m is a 1 x 2H_a map
  const double r = std::sqrt(6.0 / static_cast<double>(fusion_m.size() + 1));
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& v : fusion_m.values()) v = dist(rng);
  fusion_b.fill(0.0);
}

void AttentionParams::validate() const {
  const std::size_t h = hidden(), d = input_dim();
  const bool ok = fwd_U.rows() == h && fwd_U.cols() == h && fwd_b.size() == h &&
                  bwd_W.rows() == h && bwd_W.cols() == d && bwd_U.rows() == h &&
                  bwd_U.cols() == h && bwd_b.size() == h && fusion_m.size() == 2 * h &&
                  fusion_b.size() == 1;
  if (!ok) throw ShapeError("AttentionParams: inconsistent tensor shapes");
}

AttentionTrace attention_forward(const Matrix& x, const AttentionParams& p) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden();
  if (T == 0) throw ShapeError("attention_forward: empty sequence");
  if (x.cols() != p.input_dim()) {
    throw ShapeError("attention_forward: sequence dimension " + std::to_string(x.cols()) +
                     " does not match attention input dimension " +
                     std::to_string(p.input_dim()));
  }
  p.validate();

  AttentionTrace tr;
  tr.fwd_pre.resize(T);
  tr.fwd_h.resize(T);
  tr.bwd_pre.resize(T);
  tr.bwd_h.resize(T);
  tr.a = Vector(T);
  tr.logits = Vector(T);

  Vector prev(H);
  for (std::size_t t = 0; t < T; ++t) {
    Vector z = affine(p.fwd_W, x.row(t), p.fwd_b);
    axpy(1.0, matvec(p.fwd_U, prev.values()).values(), z.values());
    prev = relu(z);
    tr.fwd_pre[t] = std::move(z);
    tr.fwd_h[t] = prev;
  }
  Vector next(H);
  for (std::size_t t = T; t-- > 0;) {
    Vector z = affine(p.bwd_W, x.row(t), p.bwd_b);
    axpy(1.0, matvec(p.bwd_U, next.values()).values(), z.values());
    next = relu(z);
    tr.bwd_pre[t] = std::move(z);
    tr.bwd_h[t] = next;
  }

  const auto m = p.fusion_m.values();
  for (std::size_t t = 0; t < T; ++t) {
    const double s = dot(m.first(H), tr.fwd_h[t].values()) +
                     dot(m.subspan(H), tr.bwd_h[t].values()) + p.fusion_b[0];
    tr.logits[t] = s;
    tr.a[t] = sigmoid(s);
  }
  return tr;
}

AttentionGradients attention_backward(const Matrix& x, const AttentionParams& p,
                                      const AttentionTrace& trace, const Vector& grad_a) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden();
  if (grad_a.size() != T || trace.length() != T) {
    throw ShapeError("attention_backward: grad_a/trace length does not match sequence");
  }
  AttentionGradients g{AttentionParams(p.input_dim(), H), Matrix(T, x.cols())};
  const auto m = p.fusion_m.values();

  // d(loss)/d(fused logit)
  std::vector<double> dlogit(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double a = trace.a[t];
    dlogit[t] = grad_a[t] * a * (1.0 - a);
    axpy(dlogit[t], trace.fwd_h[t].values(), g.params.fusion_m.values().first(H));
    axpy(dlogit[t], trace.bwd_h[t].values(), g.params.fusion_m.values().subspan(H));
    g.params.fusion_b[0] += dlogit[t];
  }

  // Forward stream: the recurrence runs left to right, so BPTT runs right to left.
  Vector carry(H);
  for (std::size_t t = T; t-- > 0;) {
    Vector dz(H);
    for (std::size_t i = 0; i < H; ++i) {
      dz[i] = (dlogit[t] * m[i] + carry[i]) * relu_grad(trace.fwd_pre[t][i]);
    }
    add_outer(g.params.fwd_W, dz.values(), x.row(t));
    if (t > 0) add_outer(g.params.fwd_U, dz.values(), trace.fwd_h[t - 1].values());
    axpy(1.0, dz.values(), g.params.fwd_b.values());
    add_transposed_matvec(p.fwd_W, dz.values(), g.inputs.row(t));
    carry.fill(0.0);
    add_transposed_matvec(p.fwd_U, dz.values(), carry.values());
  }

  carry.fill(0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Vector dz(H);
    for (std::size_t i = 0; i < H; ++i) {
      dz[i] = (dlogit[t] * m[H + i] + carry[i]) * relu_grad(trace.bwd_pre[t][i]);
    }
    add_outer(g.params.bwd_W, dz.values(), x.row(t));
    if (t + 1 < T) add_outer(g.params.bwd_U, dz.values(), trace.bwd_h[t + 1].values());
    axpy(1.0, dz.values(), g.params.bwd_b.values());
    add_transposed_matvec(p.bwd_W, dz.values(), g.inputs.row(t));
    carry.fill(0.0);
    add_transposed_matvec(p.bwd_U, dz.values(), carry.values());
  }
  return g;
}

}  // namespace tagm
