// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "tagm/numerics.hpp"

namespace tagm {

/// Named view of one parameter tensor, used by the optimiser, checkpoint
/// writer and gradient checker to walk a bundle generically.
struct TensorRef {
  std::string_view name;
  std::span<double> values;
  /// True for the attention fusion layer (m, b), which has its own
  /// learning-rate multiplier.
  bool fusion = false;
};

struct ConstTensorRef {
  std::string_view name;
  std::span<const double> values;
  bool fusion = false;

  ConstTensorRef(std::string_view n, std::span<const double> v, bool f = false)
      : name(n), values(v), fusion(f) {}
  ConstTensorRef(const TensorRef& r) : name(r.name), values(r.values), fusion(r.fusion) {}
};

/// Glorot-uniform fill: U[-r, r], r = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& m, std::mt19937_64& rng);

}  // namespace tagm
