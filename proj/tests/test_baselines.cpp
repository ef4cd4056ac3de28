// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "tagm/baselines.hpp"
#include "tagm/error.hpp"
#include "test_util.hpp"

using namespace tagm;

namespace {

RnnParams random_rnn(std::size_t D, std::size_t H, std::mt19937_64& rng) {
  RnnParams p(D, H);
  p.W = test::random_matrix(H, D, rng, 0.7);
  p.U = test::random_matrix(H, H, rng, 0.5);
  p.b = test::random_vector(H, rng, 0.3);
  return p;
}

AttentionParams random_attention(std::size_t D, std::size_t H, std::mt19937_64& rng) {
  AttentionParams p(D, H);
  p.for_each_tensor([&](TensorRef r) {
    std::normal_distribution<double> n(0.0, 0.6);
    for (double& v : r.values) v = n(rng);
  });
  return p;
}

template <typename P>
std::vector<double> flatten(P p) {
  std::vector<double> out;
  p.for_each_tensor([&](TensorRef r) { out.insert(out.end(), r.values.begin(), r.values.end()); });
  return out;
}

template <typename P, typename F>
std::vector<double> numeric_of(P& p, F&& f) {
  std::vector<double> out;
  p.for_each_tensor([&](TensorRef r) {
    auto n = test::central_differences(r.values, f);
    out.insert(out.end(), n.begin(), n.end());
  });
  return out;
}

}  // namespace

TEST_CASE("plain RNN at T = 1 is relu(W·x + b)") {
  std::mt19937_64 rng(1);
  const RnnParams p = random_rnn(3, 4, rng);
  const Matrix x = test::random_matrix(1, 3, rng);
  CHECK(plain_rnn_forward(x, p).final_state() == relu(affine(p.W, x.row(0), p.b)));
}

TEST_CASE("plain RNN hand example") {
  RnnParams p(1, 1);
  p.W(0, 0) = 1.0;
  p.U(0, 0) = 0.5;
  p.b[0] = -1.0;
  const Matrix x{{3.0}, {1.0}};
  // h1 = relu(3 - 1) = 2, h2 = relu(1 + 1 - 1) = 1
  const auto tr = plain_rnn_forward(x, p);
  CHECK(tr.hidden[0][0] == 2.0);
  CHECK(tr.final_state()[0] == 1.0);
}

TEST_CASE("plain RNN with U = 0 ignores everything but the last step") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    RnnParams p = random_rnn(3, 4, rng);
    p.U.fill(0.0);
    const std::size_t T = 2 + trial % 8;
    Matrix x = test::random_matrix(T, 3, rng);
    const Vector ref = plain_rnn_forward(x, p).final_state();
    for (std::size_t t = 0; t + 1 < T; ++t)
      for (double& v : x.row(t)) v = std::normal_distribution<double>(0.0, 5.0)(rng);
    CHECK(plain_rnn_forward(x, p).final_state() == ref);
  }
}

TEST_CASE("attention pooling example and shape errors") {
  const Matrix x{{1, 2}, {3, 4}, {5, 6}};
  const Vector v = attention_pool(x, Vector{0.5, 0.0, 1.0});
  CHECK(v[0] == 5.5);
  CHECK(v[1] == 7.0);
  CHECK_THROWS_AS(attention_pool(x, Vector{1, 1}), ShapeError);
  CHECK_THROWS_AS(plain_rnn_forward(Matrix(3, 2), RnnParams(3, 2)), ShapeError);
}

TEST_CASE("constant attention makes the pooled vector permutation-invariant") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> digit(-9, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 2 + trial % 9, D = 3;
    // fusion weights zero and bias zero give a = 0.5 exactly; integer x keeps
    // every partial sum exact, so reordering cannot change rounding
    AttentionParams att = random_attention(D, 4, rng);
    att.fusion_m.fill(0.0);
    att.fusion_b[0] = 0.0;
    FeedForwardParams ff(D, 4);
    ff.W = test::random_matrix(4, D, rng);
    Matrix x(T, D);
    for (double& v : x.values()) v = digit(rng);
    std::vector<std::size_t> perm(T);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix px(T, D);
    for (std::size_t t = 0; t < T; ++t) std::copy(x.row(perm[t]).begin(), x.row(perm[t]).end(), px.row(t).begin());
    const auto a = amnn_forward(x, att, ff);
    const auto b = amnn_forward(px, att, ff);
    CHECK(a.pooled == b.pooled);
    CHECK(a.hidden == b.hidden);
  }
}

TEST_CASE("plain RNN backward matches central differences, 20 seeds") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::uint64_t k = 0;; ++k) {
      std::mt19937_64 rng(seed * 1000 + k);
      RnnParams p = random_rnn(3, 4, rng);
      Matrix x = test::random_matrix(5, 3, rng);
      const Vector w = test::random_vector(4, rng);
      const auto tr = plain_rnn_forward(x, p);
      if (test::min_abs(tr.pre) < 1e-4) continue;
      auto f = [&] { return dot(w.values(), plain_rnn_forward(x, p).final_state().values()); };
      const auto g = plain_rnn_backward(x, p, tr, w);
      std::vector<double> analytic = flatten(g.params), numeric = numeric_of(p, f);
      auto nx = test::central_differences(x.values(), f);
      analytic.insert(analytic.end(), g.inputs.values().begin(), g.inputs.values().end());
      numeric.insert(numeric.end(), nx.begin(), nx.end());
      worst = std::max(worst, test::max_rel_error(analytic, numeric));
      break;
    }
  }
  MESSAGE("rnn max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("AM-NN backward matches central differences, 20 seeds") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::uint64_t k = 0;; ++k) {
      std::mt19937_64 rng(seed * 1000 + k);
      AttentionParams att = random_attention(3, 4, rng);
      FeedForwardParams ff(3, 4);
      ff.W = test::random_matrix(4, 3, rng);
      ff.b = test::random_vector(4, rng, 0.3);
      Matrix x = test::random_matrix(5, 3, rng);
      const Vector w = test::random_vector(4, rng);
      const auto tr = amnn_forward(x, att, ff);
      const double margin = std::min({test::min_abs(tr.attention.fwd_pre), test::min_abs(tr.attention.bwd_pre),
                                      test::min_abs({tr.pre})});
      if (margin < 1e-4) continue;
      auto f = [&] { return dot(w.values(), amnn_forward(x, att, ff).hidden.values()); };
      const auto g = amnn_backward(x, att, ff, tr, w);
      std::vector<double> analytic = flatten(g.attention), numeric = numeric_of(att, f);
      auto a2 = flatten(g.ff);
      auto n2 = numeric_of(ff, f);
      analytic.insert(analytic.end(), a2.begin(), a2.end());
      numeric.insert(numeric.end(), n2.begin(), n2.end());
      auto nx = test::central_differences(x.values(), f);
      analytic.insert(analytic.end(), g.inputs.values().begin(), g.inputs.values().end());
      numeric.insert(numeric.end(), nx.begin(), nx.end());
      worst = std::max(worst, test::max_rel_error(analytic, numeric));
      break;
    }
  }
  MESSAGE("amnn max relative error " << worst);
  CHECK(worst < 1e-4);
}
