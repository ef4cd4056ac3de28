// SPDX-License-Identifier: Apache-2.0
#include "tagm/heads.hpp"

#include <algorithm>
#include <cmath>

#include "tagm/error.hpp"

namespace tagm {

const char* to_string(HeadMode mode) {
  return mode == HeadMode::multiclass ? "multiclass" : "multilabel";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "multiclass") return HeadMode::multiclass;
  if (s == "multilabel") return HeadMode::multilabel;
  throw Error("unknown head mode '" + s + "'");
}

void HeadParams::initialize(std::mt19937_64& rng) {
  glorot_uniform(W, rng);
  b.fill(0.0);
}

void validate_label(const Label& label, HeadMode mode, std::size_t classes) {
  if (mode == HeadMode::multiclass) {
    if (label.index >= classes) {
      throw Error("label index " + std::to_string(label.index) + " out of range for " +
                  std::to_string(classes) + " classes");
    }
    return;
  }
  if (label.targets.size() != classes) {
    throw Error("multilabel target has " + std::to_string(label.targets.size()) +
                " entries, expected " + std::to_string(classes));
  }
  for (auto t : label.targets) {
    if (t > 1) throw Error("multilabel target entries must be 0 or 1");
  }
}

Vector head_logits(const Vector& hT, const HeadParams& p) {
  if (hT.size() != p.hidden()) {
    throw ShapeError("head: representation has length " + std::to_string(hT.size()) +
                     ", head expects " + std::to_string(p.hidden()));
  }
  return affine(p.W, hT.values(), p.b);
}

Vector softmax_head(const Vector& hT, const HeadParams& p) {
  return softmax_stable(head_logits(hT, p));
}

Vector sigmoid_head(const Vector& hT, const HeadParams& p) {
  Vector z = head_logits(hT, p);
  for (double& v : z.values()) v = sigmoid(v);
  return z;
}

LossResult nll_loss(const Vector& probs, std::size_t y) {
  if (y >= probs.size()) {
    throw Error("nll_loss: label " + std::to_string(y) + " out of range for " +
                std::to_string(probs.size()) + " classes");
  }
  LossResult r{-std::log(std::max(probs[y], kProbabilityFloor)), probs};
  r.grad_logits[y] -= 1.0;
  return r;
}

LossResult bce_loss(const Vector& probs, const Vector& targets) {
  if (probs.size() != targets.size()) {
    throw ShapeError("bce_loss: " + std::to_string(probs.size()) + " probabilities but " +
                     std::to_string(targets.size()) + " targets");
  }
  LossResult r{0.0, Vector(probs.size())};
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double t = targets[k];
    if (t != 0.0 && t != 1.0) throw Error("bce_loss: target entries must be 0 or 1");
    const double p = std::clamp(probs[k], kProbabilityFloor, 1.0 - kProbabilityFloor);
    r.loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    r.grad_logits[k] = probs[k] - t;
  }
  return r;
}

LossResult bce_loss(const Vector& probs, std::span<const std::uint8_t> targets) {
  Vector t(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) t[k] = targets[k];
  return bce_loss(probs, t);
}

HeadGradients head_backward(const Vector& hT, const HeadParams& p, const Vector& grad_logits) {
  if (grad_logits.size() != p.classes() || hT.size() != p.hidden()) {
    throw ShapeError("head_backward: shape mismatch");
  }
  HeadGradients g{HeadParams(p.hidden(), p.classes()), Vector(p.hidden())};
  add_outer(g.params.W, grad_logits.values(), hT.values());
  axpy(1.0, grad_logits.values(), g.params.b.values());
  add_transposed_matvec(p.W, grad_logits.values(), g.hidden.values());
  return g;
}

}  // namespace tagm
