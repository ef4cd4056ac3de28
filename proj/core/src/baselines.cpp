// SPDX-License-Identifier: Apache-2.0
#include "tagm/baselines.hpp"

#include "tagm/error.hpp"

namespace tagm {

void RnnParams::initialize(std::mt19937_64& rng) {
  glorot_uniform(W, rng);
  glorot_uniform(U, rng);
  b.fill(0.0);
}

void FeedForwardParams::initialize(std::mt19937_64& rng) {
  glorot_uniform(W, rng);
  b.fill(0.0);
}

RnnTrace plain_rnn_forward(const Matrix& x, const RnnParams& p) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden();
  if (T == 0) throw ShapeError("plain_rnn_forward: empty sequence");
  if (x.cols() != p.input_dim()) {
    throw ShapeError("plain_rnn_forward: sequence dimension " + std::to_string(x.cols()) +
                     " does not match " + std::to_string(p.input_dim()));
  }
  if (p.U.rows() != H || p.U.cols() != H || p.b.size() != H) {
    throw ShapeError("RnnParams: inconsistent tensor shapes");
  }
  RnnTrace tr;
  tr.h0 = Vector(H);
  tr.pre.reserve(T);
  tr.hidden.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Vector& prev = t == 0 ? tr.h0 : tr.hidden[t - 1];
    Vector z = affine(p.W, x.row(t), p.b);
    axpy(1.0, matvec(p.U, prev.values()).values(), z.values());
    tr.hidden.push_back(relu(z));
    tr.pre.push_back(std::move(z));
  }
  return tr;
}

RnnGradients plain_rnn_backward(const Matrix& x, const RnnParams& p, const RnnTrace& trace,
                                const Vector& grad_hT) {
  const std::size_t T = x.rows();
  const std::size_t H = p.hidden();
  if (trace.hidden.size() != T || grad_hT.size() != H) {
    throw ShapeError("plain_rnn_backward: trace/upstream gradient do not match the sequence");
  }
  RnnGradients g{RnnParams(p.input_dim(), H), Matrix(T, x.cols())};
  Vector dh = grad_hT;
  Vector dz(H);
  for (std::size_t t = T; t-- > 0;) {
    const Vector& prev = t == 0 ? trace.h0 : trace.hidden[t - 1];
    for (std::size_t i = 0; i < H; ++i) dz[i] = dh[i] * relu_grad(trace.pre[t][i]);
    add_outer(g.params.W, dz.values(), x.row(t));
    add_outer(g.params.U, dz.values(), prev.values());
    axpy(1.0, dz.values(), g.params.b.values());
    add_transposed_matvec(p.W, dz.values(), g.inputs.row(t));
    dh.fill(0.0);
    add_transposed_matvec(p.U, dz.values(), dh.values());
  }
  return g;
}

Vector attention_pool(const Matrix& x, const Vector& a) {
  if (a.size() != x.rows()) throw ShapeError("attention_pool: gate count does not match sequence");
  Vector v(x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) axpy(a[t], x.row(t), v.values());
  return v;
}

AmnnTrace amnn_forward(const Matrix& x, const AttentionParams& attention,
                       const FeedForwardParams& ff) {
  if (ff.input_dim() != x.cols()) {
    throw ShapeError("amnn_forward: feed-forward input dimension " +
                     std::to_string(ff.input_dim()) + " does not match sequence dimension " +
                     std::to_string(x.cols()));
  }
  AmnnTrace tr;
  tr.attention = attention_forward(x, attention);
  tr.pooled = attention_pool(x, tr.attention.a);
  tr.pre = affine(ff.W, tr.pooled.values(), ff.b);
  tr.hidden = relu(tr.pre);
  return tr;
}

AmnnGradients amnn_backward(const Matrix& x, const AttentionParams& attention,
                            const FeedForwardParams& ff, const AmnnTrace& trace,
                            const Vector& grad_h) {
  const std::size_t T = x.rows();
  const std::size_t H = ff.hidden();
  if (grad_h.size() != H) throw ShapeError("amnn_backward: upstream gradient length mismatch");

  FeedForwardParams gff(ff.input_dim(), H);
  Vector dz(H);
  for (std::size_t i = 0; i < H; ++i) dz[i] = grad_h[i] * relu_grad(trace.pre[i]);
  add_outer(gff.W, dz.values(), trace.pooled.values());
  axpy(1.0, dz.values(), gff.b.values());
  Vector dv(ff.input_dim());
  add_transposed_matvec(ff.W, dz.values(), dv.values());

  Vector grad_a(T);
  Matrix dx(T, x.cols());
  for (std::size_t t = 0; t < T; ++t) {
    grad_a[t] = dot(dv.values(), x.row(t));
    axpy(trace.attention.a[t], dv.values(), dx.row(t));
  }
  AttentionGradients ga = attention_backward(x, attention, trace.attention, grad_a);
  axpy(1.0, ga.inputs.values(), dx.values());
  return AmnnGradients{std::move(ga.params), std::move(gff), std::move(dx)};
}

}  // namespace tagm
