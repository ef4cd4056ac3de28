// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tagm/numerics.hpp"

namespace tagm {

/// Non-interpolated average precision of `scores` against binary
/// `relevant`. Returns nullopt when no item is relevant.
std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> relevant);

/// mean(a_t | mask = 1) / mean(a_t | mask = 0). Infinite when only the
/// outside mean is zero; nullopt when either side is empty or both means
/// are zero.
std::optional<double> localization_ratio(const Vector& salience,
                                         std::span<const std::uint8_t> mask);

double median(std::vector<double> values);

}  // namespace tagm
