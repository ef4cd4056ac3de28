// SPDX-License-Identifier: Apache-2.0
#include "tagm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "tagm/error.hpp"

namespace tagm {

std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> relevant) {
  if (scores.size() != relevant.size()) throw ShapeError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!relevant[order[r]]) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(r + 1);
  }
  if (hits == 0.0) return std::nullopt;
  return sum / hits;
}

std::optional<double> localization_ratio(const Vector& salience,
                                         std::span<const std::uint8_t> mask) {
  if (mask.size() != salience.size()) throw ShapeError("localization_ratio: mask length mismatch");
  double in = 0.0, out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) {
      in += salience[t];
      ++n_in;
    } else {
      out += salience[t];
      ++n_out;
    }
  }
  if (n_in == 0 || n_out == 0) return std::nullopt;
  if (out == 0.0) {
    if (in == 0.0) return std::nullopt;
    return std::numeric_limits<double>::infinity();
  }
  return (in / static_cast<double>(n_in)) / (out / static_cast<double>(n_out));
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace tagm
