// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tagm/attention.hpp"
#include "tagm/baselines.hpp"
#include "tagm/gated_unit.hpp"
#include "tagm/heads.hpp"

namespace tagm {

enum class ModelKind : std::uint8_t { tagm = 0, rnn = 1, amnn = 2 };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Layer sizes. `attn_hidden` is unused by the plain RNN; `cell_hidden`
/// is the recurrent width (tagm, rnn) or the feed-forward width (amnn).
struct ModelDims {
  std::size_t input_dim = 0;
  std::size_t attn_hidden = 0;
  std::size_t cell_hidden = 0;
  std::size_t classes = 0;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Closed-form TAGM parameter count:
///   2(H_a·D + H_a² + H_a) + (2H_a + 1) + (H_c² + H_c·D + H_c) + K(H_c + 1)
std::size_t param_count(const ModelDims& dims);
std::size_t param_count(ModelKind kind, const ModelDims& dims);

inline constexpr const char* kInitScheme = "glorot_uniform";

/// A complete classifier. Only the bundles used by `kind` carry tensors;
/// the others stay empty. The same type doubles as the gradient set.
struct Model {
  ModelKind kind = ModelKind::tagm;
  HeadMode head_mode = HeadMode::multiclass;
  ModelDims dims;
  std::uint64_t init_seed = 0;

  AttentionParams attention;  // tagm, amnn
  CellParams cell;            // tagm
  RnnParams rnn;              // rnn
  FeedForwardParams ff;       // amnn
  HeadParams head;

  /// Zero-valued model with every tensor shaped for (kind, dims).
  static Model zeros(ModelKind kind, const ModelDims& dims,
                     HeadMode mode = HeadMode::multiclass);
  /// Glorot-initialised model; the seed is recorded for provenance.
  static Model initialized(ModelKind kind, const ModelDims& dims, HeadMode mode,
                           std::uint64_t seed);

  /// Zero model with the same structure, for gradient accumulation.
  Model zeros_like() const;

  std::size_t param_count() const;

  /// Visits the tensors of the active bundles in checkpoint order.
  template <typename F>
  void for_each_tensor(F&& f) {
    if (kind != ModelKind::rnn) attention.for_each_tensor(f);
    if (kind == ModelKind::tagm) cell.for_each_tensor(f);
    if (kind == ModelKind::rnn) rnn.for_each_tensor(f);
    if (kind == ModelKind::amnn) ff.for_each_tensor(f);
    head.for_each_tensor(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<Model*>(this)->for_each_tensor([&](TensorRef r) {
      f(ConstTensorRef{r.name, std::span<const double>(r.values), r.fusion});
    });
  }

  /// out += other (same structure).
  void accumulate(const Model& other);
  void scale(double factor);

  friend bool operator==(const Model&, const Model&) = default;
};

/// Shape list of the tensors visited by Model::for_each_tensor.
struct TensorShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
};
std::vector<TensorShape> tensor_shapes(ModelKind kind, const ModelDims& dims);

}  // namespace tagm
