// SPDX-License-Identifier: Apache-2.0
#include "tagm/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "tagm/error.hpp"
#include "tagm/metrics.hpp"
#include "tagm/parallel.hpp"
#include "tagm/random.hpp"

namespace tagm {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("TrainConfig: learning_rate must be positive");
  if (!(fusion_lr_multiplier > 0.0)) throw Error("TrainConfig: fusion_lr_multiplier must be positive");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) {
    throw Error("TrainConfig: rmsprop_decay must lie in [0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) throw Error("TrainConfig: rmsprop_epsilon must be positive");
  if (!(clip_lo <= clip_hi)) throw Error("TrainConfig: clip_lo > clip_hi");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("TrainConfig: dropout must lie in [0, 1)");
  if (batch_size == 0) throw Error("TrainConfig: batch_size must be positive");
}

DropoutMasks DropoutMasks::sample(std::size_t length, std::size_t input_dim,
                                  std::size_t representation_dim, double rate,
                                  std::mt19937_64& rng) {
  DropoutMasks m;
  if (rate <= 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  std::bernoulli_distribution drop(rate);
  m.inputs = Matrix(length, input_dim);
  for (double& v : m.inputs.values()) v = drop(rng) ? 0.0 : keep;
  m.representation = Vector(representation_dim);
  for (double& v : m.representation.values()) v = drop(rng) ? 0.0 : keep;
  return m;
}

const Vector& ForwardCache::salience() const {
  return amnn.attention.length() ? amnn.attention.a : attention.a;
}

std::size_t argmax(const Vector& v) {
  return static_cast<std::size_t>(
      std::distance(v.raw().begin(), std::max_element(v.raw().begin(), v.raw().end())));
}

namespace {

Vector head_probs(const Vector& h, const Model& model) {
  return model.head_mode == HeadMode::multiclass ? softmax_head(h, model.head)
                                                 : sigmoid_head(h, model.head);
}

}  // namespace

ForwardCache forward_full(const Sequence& seq, const Model& model, const DropoutMasks* masks) {
  if (seq.x.cols() != model.dims.input_dim) {
    throw ShapeError("forward_full: sequence dimension " + std::to_string(seq.x.cols()) +
                     " does not match model input dimension " +
                     std::to_string(model.dims.input_dim));
  }
  validate_label(seq.label, model.head_mode, model.dims.classes);

  ForwardCache c;
  c.label = seq.label;
  c.inputs = seq.x;
  const bool input_dropout = masks && masks->inputs.size() != 0;
  if (input_dropout) {
    if (masks->inputs.rows() != seq.x.rows() || masks->inputs.cols() != seq.x.cols()) {
      throw ShapeError("forward_full: input dropout mask shape mismatch");
    }
    auto x = c.inputs.values();
    auto s = masks->inputs.values();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s[i];
  }

  switch (model.kind) {
    case ModelKind::tagm:
      c.attention = attention_forward(c.inputs, model.attention);
      c.cell = cell_forward(c.inputs, c.attention.a, model.cell);
      c.representation = c.cell.final_state();
      break;
    case ModelKind::rnn:
      c.rnn = plain_rnn_forward(c.inputs, model.rnn);
      c.representation = c.rnn.final_state();
      break;
    case ModelKind::amnn:
      c.amnn = amnn_forward(c.inputs, model.attention, model.ff);
      c.representation = c.amnn.hidden;
      break;
  }

  c.head_input = c.representation;
  if (masks && masks->representation.size() != 0) {
    if (masks->representation.size() != c.representation.size()) {
      throw ShapeError("forward_full: representation dropout mask length mismatch");
    }
    c.representation_scale = masks->representation;
    for (std::size_t i = 0; i < c.head_input.size(); ++i) {
      c.head_input[i] *= c.representation_scale[i];
    }
  }

  c.logits = head_logits(c.head_input, model.head);
  LossResult lr;
  if (model.head_mode == HeadMode::multiclass) {
    c.probs = softmax_stable(c.logits);
    lr = nll_loss(c.probs, seq.label.index);
  } else {
    c.probs = c.logits;
    for (double& v : c.probs.values()) v = sigmoid(v);
    lr = bce_loss(c.probs, seq.label.targets);
  }
  c.loss = lr.loss;
  return c;
}

Model backward_full(const ForwardCache& c, const Model& model) {
  Model g = model.zeros_like();
  const Vector grad_logits = model.head_mode == HeadMode::multiclass
                                 ? nll_loss(c.probs, c.label.index).grad_logits
                                 : bce_loss(c.probs, c.label.targets).grad_logits;
  HeadGradients hg = head_backward(c.head_input, model.head, grad_logits);
  g.head = std::move(hg.params);
  Vector grad_rep = std::move(hg.hidden);
  if (c.representation_scale.size()) {
    for (std::size_t i = 0; i < grad_rep.size(); ++i) grad_rep[i] *= c.representation_scale[i];
  }

  switch (model.kind) {
    case ModelKind::tagm: {
      CellGradients cg = cell_backward(c.inputs, c.attention.a, model.cell, c.cell, grad_rep);
      g.cell = std::move(cg.params);
      g.attention = attention_backward(c.inputs, model.attention, c.attention, cg.gates).params;
      break;
    }
    case ModelKind::rnn:
      g.rnn = plain_rnn_backward(c.inputs, model.rnn, c.rnn, grad_rep).params;
      break;
    case ModelKind::amnn: {
      AmnnGradients ag = amnn_backward(c.inputs, model.attention, model.ff, c.amnn, grad_rep);
      g.attention = std::move(ag.attention);
      g.ff = std::move(ag.ff);
      break;
    }
  }
  return g;
}

Inference infer(const Matrix& x, const Model& model) {
  Inference out;
  switch (model.kind) {
    case ModelKind::tagm: {
      AttentionTrace at = attention_forward(x, model.attention);
      CellTrace ct = cell_forward(x, at.a, model.cell);
      out.probs = head_probs(ct.final_state(), model);
      out.salience = std::move(at.a);
      break;
    }
    case ModelKind::rnn:
      out.probs = head_probs(plain_rnn_forward(x, model.rnn).final_state(), model);
      break;
    case ModelKind::amnn: {
      AmnnTrace tr = amnn_forward(x, model.attention, model.ff);
      out.probs = head_probs(tr.hidden, model);
      out.salience = std::move(tr.attention.a);
      break;
    }
  }
  return out;
}

void rmsprop_step(Model& model, Model grads, RmspropState& state, const TrainConfig& cfg) {
  grads.for_each_tensor([](ConstTensorRef r) {
    if (!all_finite(r.values)) {
      throw DivergenceError("rmsprop_step: non-finite gradient in " + std::string(r.name));
    }
  });
  std::vector<std::span<double>> g, s;
  grads.for_each_tensor([&](TensorRef r) {
    clip_elementwise(r.values, cfg.clip_lo, cfg.clip_hi);
    g.push_back(r.values);
  });
  state.mean_square.for_each_tensor([&](TensorRef r) { s.push_back(r.values); });
  std::size_t k = 0;
  model.for_each_tensor([&](TensorRef r) {
    if (k >= g.size() || g[k].size() != r.values.size() || s[k].size() != r.values.size()) {
      throw ShapeError("rmsprop_step: gradient/state structure does not mirror the model at " +
                       std::string(r.name));
    }
    const double lr = r.fusion ? cfg.learning_rate * cfg.fusion_lr_multiplier : cfg.learning_rate;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      const double gi = g[k][i];
      s[k][i] = cfg.rmsprop_decay * s[k][i] + (1.0 - cfg.rmsprop_decay) * gi * gi;
      r.values[i] -= lr * gi / std::sqrt(s[k][i] + cfg.rmsprop_epsilon);
    }
    ++k;
  });
}

std::string to_json_line(const EpochRecord& r) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"train_acc", r.train_acc},
                      {"val_acc", r.val_acc},
                      {"wall_time", r.wall_time}};
  return j.dump();
}

namespace {

bool correct(const Vector& probs, const Label& label, HeadMode mode) {
  if (mode == HeadMode::multiclass) return argmax(probs) == label.index;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if ((probs[k] >= 0.5) != (label.targets[k] != 0)) return false;
  }
  return true;
}

double score_predictions(const std::vector<Vector>& probs, const std::vector<const Label*>& labels,
                         HeadMode mode, std::size_t classes) {
  if (probs.empty()) return 0.0;
  if (mode == HeadMode::multiclass) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) hits += correct(probs[i], *labels[i], mode);
    return static_cast<double>(hits) / static_cast<double>(probs.size());
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> scores(probs.size());
  std::vector<std::uint8_t> rel(probs.size());
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      scores[i] = probs[i][k];
      rel[i] = labels[i]->targets[k];
    }
    if (auto ap = average_precision(scores, rel)) {
      total += *ap;
      ++counted;
    }
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace

double evaluate(const Model& model, const Dataset& ds, const std::vector<std::size_t>& indices,
                std::size_t jobs) {
  std::vector<Vector> probs(indices.size());
  std::vector<const Label*> labels(indices.size());
  parallel_for(indices.size(), jobs, [&](std::size_t i) {
    const Sequence& s = ds.sequences.at(indices[i]);
    probs[i] = infer(s.x, model).probs;
    labels[i] = &s.label;
  });
  return score_predictions(probs, labels, model.head_mode, model.dims.classes);
}

TrainResult train(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.size() == 0) throw Error("train: empty dataset");
  if (spec.dims.input_dim != ds.dim || spec.dims.classes != ds.classes) {
    throw ShapeError("train: model dims (D=" + std::to_string(spec.dims.input_dim) +
                     ", K=" + std::to_string(spec.dims.classes) + ") do not match dataset (D=" +
                     std::to_string(ds.dim) + ", K=" + std::to_string(ds.classes) + ")");
  }
  if (spec.mode != ds.mode) throw Error("train: head mode does not match dataset mode");
  const std::vector<std::size_t> train_idx = ds.indices(Split::train);
  const std::vector<std::size_t> val_idx = ds.indices(Split::val);
  if (train_idx.empty()) throw Error("train: dataset has no training sequences");
  if (val_idx.empty()) throw Error("train: dataset has no validation sequences");

  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  Model model = Model::initialized(spec.kind, spec.dims, spec.mode, cfg.seed);
  result.model = model;
  if (cfg.epochs == 0) {
    result.best_val = evaluate(model, ds, val_idx, cfg.jobs);
    return result;
  }
  RmspropState state = RmspropState::for_model(model);
  double best_val = -std::numeric_limits<double>::infinity();
  const std::size_t rep_dim = spec.dims.cell_hidden;

  std::vector<std::size_t> order = train_idx;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5348554646ULL, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start_pos = 0; start_pos < order.size(); start_pos += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start_pos);
      std::vector<Model> grads(n);
      std::vector<double> losses(n);
      std::vector<std::uint8_t> ok(n);
      parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const std::size_t pos = start_pos + i;
        const Sequence& s = ds.sequences[order[pos]];
        std::optional<DropoutMasks> masks;
        if (cfg.dropout > 0.0) {
          std::mt19937_64 rng(derive_seed(cfg.seed, epoch, pos));
          masks = DropoutMasks::sample(s.length(), ds.dim, rep_dim, cfg.dropout, rng);
        }
        ForwardCache c = forward_full(s, model, masks ? &*masks : nullptr);
        losses[i] = c.loss;
        ok[i] = correct(c.probs, s.label, model.head_mode);
        grads[i] = backward_full(c, model);
      });
      Model total = std::move(grads[0]);
      for (std::size_t i = 1; i < n; ++i) total.accumulate(grads[i]);
      total.scale(1.0 / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(losses[i])) {
          throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                ", sequence " + std::to_string(order[start_pos + i]));
        }
        loss_sum += losses[i];
        hits += ok[i];
      }
      rmsprop_step(model, std::move(total), state, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_acc = static_cast<double>(hits) / static_cast<double>(order.size());
    rec.val_acc = evaluate(model, ds, val_idx, cfg.jobs);
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);

    if (rec.val_acc > best_val) {
      best_val = rec.val_acc;
      result.best_epoch = epoch;
      result.model = model;
    } else if (epoch - result.best_epoch >= cfg.patience) {
      break;
    }
  }
  result.best_val = best_val;
  return result;
}

GridResult grid_search(const Dataset& ds, ModelKind kind, const TrainConfig& cfg,
                       const GridSpec& grid) {
  if (grid.cell_hidden.empty() || grid.dropout.empty() ||
      (kind != ModelKind::rnn && grid.attn_hidden.empty())) {
    throw Error("grid_search: empty grid");
  }
  struct Cell {
    ModelDims dims;
    double dropout;
  };
  std::vector<Cell> cells;
  const std::vector<std::size_t> attn =
      kind == ModelKind::rnn ? std::vector<std::size_t>{0} : grid.attn_hidden;
  for (std::size_t ha : attn) {
    for (std::size_t hc : grid.cell_hidden) {
      for (double p : grid.dropout) {
        cells.push_back({ModelDims{ds.dim, ha, hc, ds.classes}, p});
      }
    }
  }

  std::vector<TrainResult> results(cells.size());
  // Cells run concurrently; each training run stays single-threaded.
  TrainConfig inner = cfg;
  inner.jobs = cells.size() > 1 ? 1 : cfg.jobs;
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    TrainConfig c = inner;
    c.dropout = cells[i].dropout;
    results[i] = train(ds, ModelSpec{kind, cells[i].dims, ds.mode}, c);
  });

  GridResult out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    GridRow row{cells[i].dims, cells[i].dropout, param_count(kind, cells[i].dims),
                results[i].best_val, results[i].best_epoch};
    out.rows.push_back(row);
    const GridRow& best = out.rows[out.best];
    if (row.val_score > best.val_score ||
        (row.val_score == best.val_score && row.params < best.params)) {
      out.best = i;
    }
  }
  out.best_model = std::move(results[out.best].model);
  out.best_log = std::move(results[out.best].log);
  return out;
}

}  // namespace tagm
