// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <string>

#include "tagm/gradcheck.hpp"

using namespace tagm;

namespace {

std::vector<std::uint64_t> seeds(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

}  // namespace

TEST_CASE("relative error uses the floored denominator") {
  CHECK(relative_error(1.0, 1.0, 1e-8) == 0.0);
  CHECK(relative_error(2.0, 1.0, 1e-8) == 0.5);
  CHECK(relative_error(0.0, 0.0, 1e-8) == 0.0);
  CHECK(relative_error(1e-12, 0.0, 1e-8) == doctest::Approx(1e-4));
}

TEST_CASE("instances stay clear of ReLU kinks") {
  GradCheckOptions opt;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = make_gradcheck_instance(opt, s);
    CHECK(min_relu_margin(inst.sequence, inst.model) >= opt.kink_margin);
    CHECK(inst.sequence.length() == opt.length);
  }
}

TEST_CASE("linear regime agrees to 1e-7") {
  GradCheckOptions opt;
  opt.linear_regime = true;
  const auto r = gradient_check(opt, seeds(5));
  MESSAGE("linear regime max relative error " << r.max_rel_error);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-7);
}

TEST_CASE("full model and both baselines pass at 1e-4 over 20 seeds") {
  for (ModelKind kind : {ModelKind::tagm, ModelKind::rnn, ModelKind::amnn}) {
    GradCheckOptions opt;
    opt.kind = kind;
    if (kind == ModelKind::rnn) opt.dims.attn_hidden = 0;
    const auto r = gradient_check(opt, seeds(20));
    INFO(std::string(to_string(kind)) << " max " << r.max_rel_error);
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.seeds.size() == 20);
    const std::size_t expected = param_count(kind, opt.dims);
    for (const auto& s : r.seeds) CHECK(s.coordinates == expected);
  }
}

// Multilabel heads and longer sequences produce a few coordinates with
// |grad| near 1e-7. A one-ulp change in the loss moves a step-1e-5 central
// difference by about 2e-11 there, so those cases are held to 1e-3.
TEST_CASE("multilabel head and longer sequences stay at the roundoff floor") {
  for (ModelKind kind : {ModelKind::tagm, ModelKind::rnn, ModelKind::amnn}) {
    GradCheckOptions opt;
    opt.kind = kind;
    opt.mode = HeadMode::multilabel;
    if (kind == ModelKind::rnn) opt.dims.attn_hidden = 0;
    const auto r = gradient_check(opt, seeds(20));
    INFO(std::string(to_string(kind)) << " multilabel max " << r.max_rel_error);
    CHECK(r.max_rel_error < 1e-3);
  }
  GradCheckOptions opt;
  opt.length = 12;
  const auto r = gradient_check(opt, seeds(20));
  INFO("T=12 max " << r.max_rel_error);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("scaling one analytic coordinate by 1.01 fails the check") {
  for (ModelKind kind : {ModelKind::tagm, ModelKind::rnn, ModelKind::amnn}) {
    GradCheckOptions opt;
    opt.kind = kind;
    if (kind == ModelKind::rnn) opt.dims.attn_hidden = 0;
    opt.corrupt = true;
    const auto r = gradient_check(opt, seeds(20));
    CHECK_FALSE(r.passed);
    for (const auto& s : r.seeds) CHECK_FALSE(s.passed);
  }
}
