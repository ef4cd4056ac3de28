// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tagm/data.hpp"
#include "tagm/model.hpp"

namespace tagm {

struct TrainConfig {
  double learning_rate = 1e-3;
  /// Multiplies the learning rate of the attention fusion layer (m, b).
  double fusion_lr_multiplier = 1.0;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  double dropout = 0.0;
  /// Number of sequences whose gradients are averaged per update.
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  /// Stop after this many epochs without a validation improvement.
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  /// Worker threads for per-sequence gradients; results do not depend on it.
  std::size_t jobs = 1;

  void validate() const;
};

/// Inverted-dropout scale factors (0 or 1/(1-p)). Empty means "no dropout".
struct DropoutMasks {
  Matrix inputs;          // T x D, shared by every consumer of x_t
  Vector representation;  // applied to the final representation before the head

  static DropoutMasks sample(std::size_t length, std::size_t input_dim,
                             std::size_t representation_dim, double rate, std::mt19937_64& rng);
};

/// All intermediate state of one forward pass, sufficient for backward_full.
struct ForwardCache {
  Matrix inputs;  // observations after input dropout
  AttentionTrace attention;
  CellTrace cell;
  RnnTrace rnn;
  AmnnTrace amnn;
  Vector representation;  // h_T (tagm, rnn) or h (amnn), before dropout
  Vector head_input;
  Vector representation_scale;  // empty when no dropout was applied
  Vector logits;
  Vector probs;
  Label label;
  double loss = 0.0;

  /// Salience scores a_t (tagm and amnn; empty for rnn).
  const Vector& salience() const;
};

/// attention -> gated unit -> head -> loss (or the baseline equivalent).
/// Passing masks selects training mode.
ForwardCache forward_full(const Sequence& seq, const Model& model,
                          const DropoutMasks* masks = nullptr);

/// Exact gradient of cache.loss with respect to every active tensor.
Model backward_full(const ForwardCache& cache, const Model& model);

struct Inference {
  Vector probs;
  Vector salience;
};

/// Dropout-free forward pass without a loss.
Inference infer(const Matrix& x, const Model& model);

/// Class index with the highest probability (first on ties).
std::size_t argmax(const Vector& v);

/// Running mean-square accumulators, shaped like the model.
struct RmspropState {
  Model mean_square;

  static RmspropState for_model(const Model& m) { return RmspropState{m.zeros_like()}; }
};

/// Clips grads to [clip_lo, clip_hi], then applies one RMSprop update.
/// Throws DivergenceError if any gradient is non-finite (model untouched).
void rmsprop_step(Model& model, Model grads, RmspropState& state, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double wall_time = 0.0;  // seconds since training started
};

/// One JSON object per line; wall_time is the only non-deterministic field.
std::string to_json_line(const EpochRecord& r);

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;  // 0 = the initial model
  double best_val = 0.0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::tagm;
  ModelDims dims;
  HeadMode mode = HeadMode::multiclass;
};

/// Trains on the dataset's train split, selects on its val split. The
/// validation score is accuracy (multiclass) or mean AP (multilabel).
/// Throws DivergenceError on a non-finite loss.
TrainResult train(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg);

/// Accuracy (multiclass) or mean average precision (multilabel) on the
/// given sequences, with no dropout.
double evaluate(const Model& model, const Dataset& ds, const std::vector<std::size_t>& indices,
                std::size_t jobs = 1);

struct GridSpec {
  std::vector<std::size_t> attn_hidden{64, 128, 256};
  std::vector<std::size_t> cell_hidden{64, 128, 256};
  std::vector<double> dropout{0.0, 0.25, 0.5};
};

struct GridRow {
  ModelDims dims;
  double dropout = 0.0;
  std::size_t params = 0;
  double val_score = 0.0;
  std::size_t best_epoch = 0;
};

struct GridResult {
  std::vector<GridRow> rows;  // in grid order
  std::size_t best = 0;       // index into rows
  Model best_model;
  std::vector<EpochRecord> best_log;
};

/// Trains one model per (H_a, H_c, dropout) cell. The best validation score
/// wins; ties go to fewer parameters, then to the earlier cell. For the
/// plain RNN the attention sizes are ignored and duplicate cells dropped.
GridResult grid_search(const Dataset& ds, ModelKind kind, const TrainConfig& cfg,
                       const GridSpec& grid);

}  // namespace tagm
