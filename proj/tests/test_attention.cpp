// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "tagm/attention.hpp"
#include "tagm/error.hpp"
#include "test_util.hpp"

using namespace tagm;

namespace {

AttentionParams random_params(std::size_t D, std::size_t H, std::mt19937_64& rng) {
  AttentionParams p(D, H);
  p.fwd_W = test::random_matrix(H, D, rng, 0.7);
  p.fwd_U = test::random_matrix(H, H, rng, 0.5);
  p.fwd_b = test::random_vector(H, rng, 0.3);
  p.bwd_W = test::random_matrix(H, D, rng, 0.7);
  p.bwd_U = test::random_matrix(H, H, rng, 0.5);
  p.bwd_b = test::random_vector(H, rng, 0.3);
  p.fusion_m = test::random_vector(2 * H, rng, 0.8);
  p.fusion_b = test::random_vector(1, rng, 0.3);
  return p;
}

double kink_margin(const AttentionTrace& tr) {
  return std::min(test::min_abs(tr.fwd_pre), test::min_abs(tr.bwd_pre));
}

struct Instance {
  AttentionParams p;
  Matrix x;
  Vector w;
};

Instance kink_free_instance(std::size_t D, std::size_t H, std::size_t T, std::uint64_t seed) {
  for (std::uint64_t k = 0;; ++k) {
    std::mt19937_64 rng(seed * 1000 + k);
    Instance in{random_params(D, H, rng), test::random_matrix(T, D, rng), test::random_vector(T, rng)};
    if (kink_margin(attention_forward(in.x, in.p)) > 1e-4) return in;
  }
}

double weighted_salience(const Matrix& x, const AttentionParams& p, const Vector& w) {
  const Vector a = attention_forward(x, p).a;
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += w[t] * a[t];
  return s;
}

}  // namespace

TEST_CASE("all-zero parameters give a uniform 0.5 gate") {
  const AttentionParams p(3, 4);
  std::mt19937_64 rng(1);
  const auto tr = attention_forward(test::random_matrix(7, 3, rng), p);
  REQUIRE(tr.length() == 7);
  for (double a : tr.a.values()) CHECK(a == 0.5);
}

TEST_CASE("saturated fusion bias closes the gate") {
  std::mt19937_64 rng(2);
  AttentionParams p = random_params(3, 4, rng);
  p.fusion_m.fill(0.0);
  p.fusion_b[0] = -40.0;
  const auto tr = attention_forward(test::random_matrix(6, 3, rng), p);
  for (double a : tr.a.values()) CHECK(a < 1e-17);
}

TEST_CASE("hand-unrolled recurrence, T=2 D=1 H=1") {
  AttentionParams p(1, 1);
  p.fwd_W(0, 0) = p.fwd_U(0, 0) = p.bwd_W(0, 0) = p.bwd_U(0, 0) = 1.0;
  p.fusion_m = Vector{1, 1};
  const Matrix x{{1}, {1}};
  const auto tr = attention_forward(x, p);
  CHECK(tr.fwd_h[0][0] == 1.0);
  CHECK(tr.fwd_h[1][0] == 2.0);
  CHECK(tr.bwd_h[0][0] == 2.0);
  CHECK(tr.bwd_h[1][0] == 1.0);
  CHECK(tr.a[0] == doctest::Approx(0.9525741268224334).epsilon(1e-15));
  CHECK(tr.a[1] == doctest::Approx(0.9525741268224334).epsilon(1e-15));
}

TEST_CASE("forward rejects empty and mismatched sequences") {
  const AttentionParams p(3, 2);
  CHECK_THROWS_AS(attention_forward(Matrix(0, 3), p), ShapeError);
  CHECK_THROWS_AS(attention_forward(Matrix(4, 2), p), ShapeError);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  std::mt19937_64 rng(3);
  const AttentionParams p = random_params(3, 4, rng);
  const Matrix x = test::random_matrix(5, 3, rng);
  const auto tr = attention_forward(x, p);
  const auto g = attention_backward(x, p, tr, Vector(5));
  AttentionParams gp = g.params;
  gp.for_each_tensor([](TensorRef r) {
    for (double v : r.values) CHECK(v == 0.0);
  });
  for (double v : g.inputs.values()) CHECK(v == 0.0);
}

TEST_CASE("backward: single timestep fusion bias gradient is g·a·(1-a)") {
  std::mt19937_64 rng(4);
  const AttentionParams p = random_params(2, 3, rng);
  const Matrix x = test::random_matrix(1, 2, rng);
  const auto tr = attention_forward(x, p);
  const double g = 0.7;
  const auto grads = attention_backward(x, p, tr, Vector{g});
  const double a = tr.a[0];
  CHECK(grads.params.fusion_b[0] == doctest::Approx(g * a * (1 - a)).epsilon(1e-15));
}

TEST_CASE("backward: mismatched upstream length is rejected") {
  const AttentionParams p(2, 2);
  const Matrix x(3, 2);
  const auto tr = attention_forward(x, p);
  CHECK_THROWS_AS(attention_backward(x, p, tr, Vector(2)), ShapeError);
}

TEST_CASE("backward matches central differences (D=3, H_a=4, T=5, 20 seeds)") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Instance in = kink_free_instance(3, 4, 5, seed);
    const auto tr = attention_forward(in.x, in.p);
    const auto g = attention_backward(in.x, in.p, tr, in.w);

    std::vector<double> analytic, numeric;
    AttentionParams probe = in.p;
    AttentionParams gp = g.params;
    gp.for_each_tensor([&](TensorRef r) { analytic.insert(analytic.end(), r.values.begin(), r.values.end()); });
    probe.for_each_tensor([&](TensorRef r) {
      auto n = test::central_differences(r.values, [&] { return weighted_salience(in.x, probe, in.w); });
      numeric.insert(numeric.end(), n.begin(), n.end());
    });
    Matrix xp = in.x;
    auto nx = test::central_differences(xp.values(), [&] { return weighted_salience(xp, in.p, in.w); });
    analytic.insert(analytic.end(), g.inputs.values().begin(), g.inputs.values().end());
    numeric.insert(numeric.end(), nx.begin(), nx.end());
    worst = std::max(worst, test::max_rel_error(analytic, numeric));
  }
  MESSAGE("attention max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("salience is always inside [0, 1]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    AttentionParams p = random_params(2, 3, rng);
    for (double& v : p.fusion_m.values()) v *= 20.0;
    const auto tr = attention_forward(test::random_matrix(1 + trial % 9, 2, rng, 5.0), p);
    for (double a : tr.a.values()) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
  }
}

TEST_CASE("time reversal with swapped directions reverses the salience exactly") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t H = 3, T = 2 + trial % 8;
    const AttentionParams p = random_params(4, H, rng);
    const Matrix x = test::random_matrix(T, 4, rng);

    AttentionParams swapped = p;
    std::swap(swapped.fwd_W, swapped.bwd_W);
    std::swap(swapped.fwd_U, swapped.bwd_U);
    std::swap(swapped.fwd_b, swapped.bwd_b);
    for (std::size_t i = 0; i < H; ++i) std::swap(swapped.fusion_m[i], swapped.fusion_m[H + i]);
    Matrix rx(T, 4);
    for (std::size_t t = 0; t < T; ++t) {
      std::copy(x.row(t).begin(), x.row(t).end(), rx.row(T - 1 - t).begin());
    }
    const Vector a = attention_forward(x, p).a;
    const Vector ra = attention_forward(rx, swapped).a;
    for (std::size_t t = 0; t < T; ++t) CHECK(ra[T - 1 - t] == a[t]);
  }
}

TEST_CASE("salience at t depends on past and future observations") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance in = kink_free_instance(3, 4, 6, 100 + seed);
    const auto tr = attention_forward(in.x, in.p);
    const std::size_t t = 2;
    Vector onehot(6);
    onehot[t] = 1.0;
    const auto g = attention_backward(in.x, in.p, tr, onehot);
    double before = 0.0, after = 0.0;
    for (std::size_t s = 0; s < 6; ++s) {
      double n = 0.0;
      for (double v : g.inputs.row(s)) n += std::abs(v);
      (s < t ? before : after) += s == t ? 0.0 : n;
    }
    INFO("seed " << seed);
    CHECK(before > 0.0);
    CHECK(after > 0.0);
  }
}
