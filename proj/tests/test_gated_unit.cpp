// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "tagm/error.hpp"
#include "tagm/gated_unit.hpp"
#include "test_util.hpp"

using namespace tagm;

namespace {

CellParams random_cell(std::size_t D, std::size_t H, std::mt19937_64& rng) {
  CellParams p(D, H);
  p.W = test::random_matrix(H, H, rng, 0.5);
  p.U = test::random_matrix(H, D, rng, 0.7);
  p.b = test::random_vector(H, rng, 0.3);
  return p;
}

Matrix insert_row(const Matrix& x, std::size_t at, std::span<const double> row) {
  Matrix out(x.rows() + 1, x.cols());
  for (std::size_t t = 0, s = 0; t < out.rows(); ++t) {
    auto dst = out.row(t);
    if (t == at) {
      std::copy(row.begin(), row.end(), dst.begin());
    } else {
      auto src = x.row(s++);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

Vector insert_value(const Vector& v, std::size_t at, double value) {
  std::vector<double> out(v.values().begin(), v.values().end());
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), value);
  return Vector(std::move(out));
}

}  // namespace

TEST_CASE("hand example: identity weights, a = [1, 0.5]") {
  CellParams p(1, 1);
  p.W(0, 0) = 1.0;
  p.U(0, 0) = 1.0;
  const Matrix x{{0.5}, {2.0}};
  const auto tr = cell_forward(x, Vector{1.0, 0.5}, p);
  CHECK(tr.hidden[0][0] == 0.5);
  // h' = relu(0.5 + 2) = 2.5; h = 0.5·0.5 + 0.5·2.5
  CHECK(tr.hidden[1][0] == 1.5);
}

TEST_CASE("a = 0 everywhere keeps h_T at exactly zero") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const CellParams p = random_cell(3, 4, rng);
    const std::size_t T = 1 + trial % 12;
    const auto tr = cell_forward(test::random_matrix(T, 3, rng, 3.0), Vector(T), p);
    for (double v : tr.final_state().values()) CHECK(v == 0.0);
  }
}

TEST_CASE("a = 1 with W = 0 reduces to relu(U·x_t + b) bit-exactly") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    CellParams p = random_cell(3, 4, rng);
    p.W.fill(0.0);
    const std::size_t T = 1 + trial % 7;
    const Matrix x = test::random_matrix(T, 3, rng);
    const auto tr = cell_forward(x, Vector(T, 1.0), p);
    for (std::size_t t = 0; t < T; ++t) {
      CHECK(tr.hidden[t] == relu(affine(p.U, x.row(t), p.b)));
    }
  }
}

TEST_CASE("gates outside [0, 1] and shape mismatches are rejected") {
  const CellParams p(2, 3);
  const Matrix x(2, 2);
  CHECK_THROWS_AS(cell_forward(x, Vector{0.5, 1.5}, p), Error);
  CHECK_THROWS_AS(cell_forward(x, Vector{-0.1, 0.5}, p), Error);
  CHECK_THROWS_AS(cell_forward(x, Vector{0.5}, p), ShapeError);
  CHECK_THROWS_AS(cell_forward(Matrix(2, 3), Vector{0.5, 0.5}, p), ShapeError);
}

TEST_CASE("convexity bound holds coordinatewise on 1000 random instances") {
  std::mt19937_64 rng(3);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t D = 1 + trial % 4, H = 1 + trial % 5, T = 1 + trial % 10;
    const CellParams p = random_cell(D, H, rng);
    Vector a = test::random_gates(T, rng);
    if (trial % 3 == 0) a[0] = 0.0;
    if (trial % 5 == 0) a[T - 1] = 1.0;
    const auto tr = cell_forward(test::random_matrix(T, D, rng, 2.0), a, p);
    for (std::size_t t = 0; t < T; ++t) {
      const Vector& prev = t == 0 ? tr.h0 : tr.hidden[t - 1];
      for (std::size_t i = 0; i < H; ++i) {
        const double lo = std::min(prev[i], tr.candidate[t][i]);
        const double hi = std::max(prev[i], tr.candidate[t][i]);
        if (tr.hidden[t][i] < lo || tr.hidden[t][i] > hi) ++violations;
      }
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("inserting a closed-gate observation anywhere leaves h_T unchanged") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + trial % 8;
    const CellParams p = random_cell(3, 4, rng);
    const Matrix x = test::random_matrix(T, 3, rng);
    const Vector a = test::random_gates(T, rng);
    const Vector noise = test::random_vector(3, rng, 10.0);
    const std::size_t at = static_cast<std::size_t>(trial) % (T + 1);
    const Vector hT = cell_forward(x, a, p).final_state();
    const Vector hT2 = cell_forward(insert_row(x, at, noise.values()), insert_value(a, at, 0.0), p).final_state();
    CHECK(hT == hT2);
  }
}

TEST_CASE("prepending k zero-attention observations leaves h_T unchanged") {
  std::mt19937_64 rng(5);
  const CellParams p = random_cell(3, 4, rng);
  const Matrix x = test::random_matrix(6, 3, rng);
  const Vector a = test::random_gates(6, rng);
  const Vector ref = cell_forward(x, a, p).final_state();
  for (std::size_t k = 1; k <= 25; ++k) {
    Matrix xx = x;
    Vector aa = a;
    for (std::size_t j = 0; j < k; ++j) {
      xx = insert_row(xx, 0, test::random_vector(3, rng, 5.0).values());
      aa = insert_value(aa, 0, 0.0);
    }
    CHECK(cell_forward(xx, aa, p).final_state() == ref);
  }
}

TEST_CASE("backward matches central differences (D=3, H_c=4, T=6, 20 seeds)") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::uint64_t k = 0;; ++k) {
      std::mt19937_64 rng(seed * 1000 + k);
      CellParams p = random_cell(3, 4, rng);
      Matrix x = test::random_matrix(6, 3, rng);
      Vector a = test::random_gates(6, rng);
      const Vector w = test::random_vector(4, rng);
      const auto tr = cell_forward(x, a, p);
      if (test::min_abs(tr.pre) < 1e-4) continue;

      auto objective = [&] { return dot(w.values(), cell_forward(x, a, p).final_state().values()); };
      const auto g = cell_backward(x, a, p, tr, w);
      CellParams gp = g.params;
      std::vector<double> analytic, numeric;
      gp.for_each_tensor([&](TensorRef r) { analytic.insert(analytic.end(), r.values.begin(), r.values.end()); });
      p.for_each_tensor([&](TensorRef r) {
        auto n = test::central_differences(r.values, objective);
        numeric.insert(numeric.end(), n.begin(), n.end());
      });
      auto na = test::central_differences(a.values(), objective);
      auto nx = test::central_differences(x.values(), objective);
      analytic.insert(analytic.end(), g.gates.values().begin(), g.gates.values().end());
      analytic.insert(analytic.end(), g.inputs.values().begin(), g.inputs.values().end());
      numeric.insert(numeric.end(), na.begin(), na.end());
      numeric.insert(numeric.end(), nx.begin(), nx.end());
      worst = std::max(worst, test::max_rel_error(analytic, numeric));
      break;
    }
  }
  MESSAGE("cell max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("closed gate blocks all gradient into the parameters") {
  std::mt19937_64 rng(6);
  const CellParams p = random_cell(3, 4, rng);
  const Matrix x = test::random_matrix(5, 3, rng);
  const Vector a(5);
  const auto tr = cell_forward(x, a, p);
  auto g = cell_backward(x, a, p, tr, test::random_vector(4, rng));
  g.params.for_each_tensor([](TensorRef r) {
    for (double v : r.values) CHECK(v == 0.0);
  });
  for (double v : g.inputs.values()) CHECK(v == 0.0);
}
