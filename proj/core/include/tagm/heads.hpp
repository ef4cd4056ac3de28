// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tagm/numerics.hpp"
#include "tagm/params.hpp"

namespace tagm {

enum class HeadMode : std::uint8_t { multiclass = 0, multilabel = 1 };

const char* to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& s);

/// Linear classifier layer shared by the softmax and sigmoid heads.
struct HeadParams {
  Matrix W;  // K x H
  Vector b;  // K

  HeadParams() = default;
  HeadParams(std::size_t hidden, std::size_t classes) : W(classes, hidden), b(classes) {}

  std::size_t hidden() const { return W.cols(); }
  std::size_t classes() const { return W.rows(); }
  std::size_t param_count() const { return W.size() + b.size(); }

  void initialize(std::mt19937_64& rng);

  template <typename F>
  void for_each_tensor(F&& f) {
    f(TensorRef{"head.W", W.values()});
    f(TensorRef{"head.b", b.values()});
  }

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

/// Ground truth for one sequence: a class index (multiclass) or a binary
/// indicator per class (multilabel).
struct Label {
  std::size_t index = 0;
  std::vector<std::uint8_t> targets;

  static Label single(std::size_t index) { return Label{index, {}}; }
  static Label multi(std::vector<std::uint8_t> targets) { return Label{0, std::move(targets)}; }

  friend bool operator==(const Label&, const Label&) = default;
};

/// Throws Error if `label` is not valid for (mode, classes).
void validate_label(const Label& label, HeadMode mode, std::size_t classes);

struct LossResult {
  double loss = 0.0;
  Vector grad_logits;
};

inline constexpr double kProbabilityFloor = 1e-12;

Vector head_logits(const Vector& hT, const HeadParams& p);

/// softmax(W·h + b)
Vector softmax_head(const Vector& hT, const HeadParams& p);

/// elementwise sigmoid(W·h + b)
Vector sigmoid_head(const Vector& hT, const HeadParams& p);

/// -log p_y (p_y floored at 1e-12); gradient w.r.t. the logits is p - onehot(y).
LossResult nll_loss(const Vector& probs, std::size_t y);

/// Joint binary cross-entropy over K independent sigmoids; gradient w.r.t.
/// the logits is p - t.
LossResult bce_loss(const Vector& probs, std::span<const std::uint8_t> targets);
LossResult bce_loss(const Vector& probs, const Vector& targets);

struct HeadGradients {
  HeadParams params;
  Vector hidden;
};

/// Backpropagates grad_logits through the linear layer.
HeadGradients head_backward(const Vector& hT, const HeadParams& p, const Vector& grad_logits);

}  // namespace tagm
