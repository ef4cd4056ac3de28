// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tagm/data.hpp"
#include "tagm/model.hpp"

namespace tagm {

struct GradCheckOptions {
  ModelKind kind = ModelKind::tagm;
  ModelDims dims{3, 4, 3, 3};
  HeadMode mode = HeadMode::multiclass;
  std::size_t length = 5;
  double step = 1e-5;
  double tolerance = 1e-4;
  double denominator_floor = 1e-8;
  /// Pre-activations closer than this to the ReLU kink trigger a resample.
  double kink_margin = 1e-4;
  /// Draw positive weights and inputs so every ReLU is in its linear region.
  bool linear_regime = false;
  /// Mutation check: scale the largest analytic coordinate by this factor.
  bool corrupt = false;
  double corrupt_factor = 1.01;
};

struct SeedReport {
  std::uint64_t seed = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
  std::size_t resamples = 0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<SeedReport> seeds;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Random model and sequence for a seed, resampled until no ReLU
/// pre-activation lies within kink_margin of zero.
struct GradCheckInstance {
  Model model;
  Sequence sequence;
  std::size_t resamples = 0;
};
GradCheckInstance make_gradcheck_instance(const GradCheckOptions& opt, std::uint64_t seed);

/// Smallest |pre-activation| over every ReLU evaluated by the forward pass.
double min_relu_margin(const Sequence& seq, const Model& model);

/// Central finite differences of the loss for every coordinate, in
/// Model::for_each_tensor order.
std::vector<double> numeric_gradient(const Sequence& seq, const Model& model, double step);

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

SeedReport check_instance(const GradCheckInstance& inst, const GradCheckOptions& opt,
                          std::uint64_t seed);

GradCheckReport gradient_check(const GradCheckOptions& opt, const std::vector<std::uint64_t>& seeds);

}  // namespace tagm
