// SPDX-License-Identifier: Apache-2.0
#include "tagm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tagm/error.hpp"
#include "tagm/random.hpp"
#include "tagm/training.hpp"

namespace tagm {

namespace {

double min_abs(const Vector& v, double current) {
  for (double x : v.values()) current = std::min(current, std::abs(x));
  return current;
}

Model random_model(const GradCheckOptions& opt, std::mt19937_64& rng) {
  Model m = Model::initialized(opt.kind, opt.dims, opt.mode, rng());
  if (opt.linear_regime) {
    std::uniform_real_distribution<double> pos(0.05, 0.4);
    m.for_each_tensor([&](TensorRef r) {
      if (r.name.starts_with("head.")) return;
      for (double& v : r.values) v = pos(rng);
    });
    return m;
  }
  // Non-zero biases so the instance is generic.
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  m.for_each_tensor([&](TensorRef r) {
    if (r.name.ends_with("_b") || r.name.ends_with(".b")) {
      for (double& v : r.values) v = bias(rng);
    }
  });
  return m;
}

Sequence random_sequence(const GradCheckOptions& opt, std::mt19937_64& rng) {
  Sequence s;
  s.x = Matrix(opt.length, opt.dims.input_dim);
  if (opt.linear_regime) {
    std::uniform_real_distribution<double> pos(0.1, 1.0);
    for (double& v : s.x.values()) v = pos(rng);
  } else {
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : s.x.values()) v = n(rng);
  }
  std::uniform_int_distribution<std::size_t> cls(0, opt.dims.classes - 1);
  if (opt.mode == HeadMode::multiclass) {
    s.label = Label::single(cls(rng));
  } else {
    std::vector<std::uint8_t> t(opt.dims.classes);
    std::bernoulli_distribution on(0.5);
    for (auto& v : t) v = on(rng);
    s.label = Label::multi(std::move(t));
  }
  return s;
}

}  // namespace

double min_relu_margin(const Sequence& seq, const Model& model) {
  const ForwardCache c = forward_full(seq, model);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& v : c.attention.fwd_pre) m = min_abs(v, m);
  for (const auto& v : c.attention.bwd_pre) m = min_abs(v, m);
  for (const auto& v : c.cell.pre) m = min_abs(v, m);
  for (const auto& v : c.rnn.pre) m = min_abs(v, m);
  for (const auto& v : c.amnn.attention.fwd_pre) m = min_abs(v, m);
  for (const auto& v : c.amnn.attention.bwd_pre) m = min_abs(v, m);
  m = min_abs(c.amnn.pre, m);
  return m;
}

GradCheckInstance make_gradcheck_instance(const GradCheckOptions& opt, std::uint64_t seed) {
  GradCheckInstance inst;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt == 1000) {
      throw Error("gradient_check: no kink-free instance found for seed " + std::to_string(seed));
    }
    std::mt19937_64 rng(derive_seed(seed, attempt));
    inst.model = random_model(opt, rng);
    inst.sequence = random_sequence(opt, rng);
    inst.resamples = attempt;
    if (min_relu_margin(inst.sequence, inst.model) >= opt.kink_margin) return inst;
  }
}

std::vector<double> numeric_gradient(const Sequence& seq, const Model& model, double step) {
  Model probe = model;
  std::vector<double> out;
  probe.for_each_tensor([&](TensorRef r) {
    for (double& v : r.values) {
      const double saved = v;
      v = saved + step;
      const double up = forward_full(seq, probe).loss;
      v = saved - step;
      const double down = forward_full(seq, probe).loss;
      v = saved;
      out.push_back((up - down) / (2.0 * step));
    }
  });
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

SeedReport check_instance(const GradCheckInstance& inst, const GradCheckOptions& opt,
                          std::uint64_t seed) {
  const ForwardCache cache = forward_full(inst.sequence, inst.model);
  const Model grads = backward_full(cache, inst.model);

  std::vector<double> analytic;
  std::vector<std::pair<std::string, std::size_t>> where;
  grads.for_each_tensor([&](ConstTensorRef r) {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      analytic.push_back(r.values[i]);
      where.emplace_back(std::string(r.name), i);
    }
  });
  if (opt.corrupt && !analytic.empty()) {
    auto it = std::max_element(analytic.begin(), analytic.end(),
                               [](double a, double b) { return std::abs(a) < std::abs(b); });
    *it *= opt.corrupt_factor;
  }
  const std::vector<double> numeric = numeric_gradient(inst.sequence, inst.model, opt.step);

  SeedReport rep;
  rep.seed = seed;
  rep.coordinates = analytic.size();
  rep.resamples = inst.resamples;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double e = relative_error(analytic[i], numeric[i], opt.denominator_floor);
    if (e > rep.max_rel_error || i == 0) {
      rep.max_rel_error = e;
      rep.worst_tensor = where[i].first;
      rep.worst_index = where[i].second;
    }
  }
  rep.passed = rep.max_rel_error < opt.tolerance;
  return rep;
}

GradCheckReport gradient_check(const GradCheckOptions& opt, const std::vector<std::uint64_t>& seeds) {
  GradCheckReport report;
  report.passed = true;
  for (std::uint64_t seed : seeds) {
    SeedReport r = check_instance(make_gradcheck_instance(opt, seed), opt, seed);
    report.max_rel_error = std::max(report.max_rel_error, r.max_rel_error);
    report.passed = report.passed && r.passed;
    report.seeds.push_back(std::move(r));
  }
  return report;
}

}  // namespace tagm
