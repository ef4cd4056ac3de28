// SPDX-License-Identifier: Apache-2.0
#include "tagm/model.hpp"

#include <random>

#include "tagm/error.hpp"

namespace tagm {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::tagm:
      return "tagm";
    case ModelKind::rnn:
      return "rnn";
    case ModelKind::amnn:
      return "amnn";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "tagm") return ModelKind::tagm;
  if (s == "rnn") return ModelKind::rnn;
  if (s == "amnn") return ModelKind::amnn;
  throw Error("unknown model kind '" + s + "' (expected tagm, rnn or amnn)");
}

std::size_t param_count(const ModelDims& d) {
  const std::size_t D = d.input_dim, Ha = d.attn_hidden, Hc = d.cell_hidden, K = d.classes;
  return 2 * (Ha * D + Ha * Ha + Ha) + (2 * Ha + 1) + (Hc * Hc + Hc * D + Hc) + K * (Hc + 1);
}

std::size_t param_count(ModelKind kind, const ModelDims& d) {
  const std::size_t D = d.input_dim, Ha = d.attn_hidden, H = d.cell_hidden, K = d.classes;
  switch (kind) {
    case ModelKind::tagm:
      return param_count(d);
    case ModelKind::rnn:
      return (H * D + H * H + H) + K * (H + 1);
    case ModelKind::amnn:
      return 2 * (Ha * D + Ha * Ha + Ha) + (2 * Ha + 1) + (H * D + H) + K * (H + 1);
  }
  return 0;
}

static void check_dims(ModelKind kind, const ModelDims& d) {
  if (d.input_dim == 0 || d.cell_hidden == 0 || d.classes == 0 ||
      (kind != ModelKind::rnn && d.attn_hidden == 0)) {
    throw Error("model dimensions must be positive");
  }
}

Model Model::zeros(ModelKind kind, const ModelDims& dims, HeadMode mode) {
  check_dims(kind, dims);
  Model m;
  m.kind = kind;
  m.head_mode = mode;
  m.dims = dims;
  if (kind != ModelKind::rnn) m.attention = AttentionParams(dims.input_dim, dims.attn_hidden);
  if (kind == ModelKind::tagm) m.cell = CellParams(dims.input_dim, dims.cell_hidden);
  if (kind == ModelKind::rnn) m.rnn = RnnParams(dims.input_dim, dims.cell_hidden);
  if (kind == ModelKind::amnn) m.ff = FeedForwardParams(dims.input_dim, dims.cell_hidden);
  m.head = HeadParams(dims.cell_hidden, dims.classes);
  if (kind == ModelKind::rnn) m.dims.attn_hidden = 0;
  return m;
}

Model Model::initialized(ModelKind kind, const ModelDims& dims, HeadMode mode,
                         std::uint64_t seed) {
  Model m = zeros(kind, dims, mode);
  m.init_seed = seed;
  std::mt19937_64 rng(seed);
  if (kind != ModelKind::rnn) m.attention.initialize(rng);
  if (kind == ModelKind::tagm) m.cell.initialize(rng);
  if (kind == ModelKind::rnn) m.rnn.initialize(rng);
  if (kind == ModelKind::amnn) m.ff.initialize(rng);
  m.head.initialize(rng);
  return m;
}

Model Model::zeros_like() const {
  Model m = zeros(kind, dims, head_mode);
  m.init_seed = init_seed;
  return m;
}

std::size_t Model::param_count() const { return tagm::param_count(kind, dims); }

void Model::accumulate(const Model& other) {
  std::vector<std::span<const double>> src;
  other.for_each_tensor([&](ConstTensorRef r) { src.push_back(r.values); });
  std::size_t i = 0;
  for_each_tensor([&](TensorRef r) {
    if (i >= src.size() || src[i].size() != r.values.size()) {
      throw ShapeError("Model::accumulate: structure mismatch at " + std::string(r.name));
    }
    axpy(1.0, src[i++], r.values);
  });
}

void Model::scale(double factor) {
  for_each_tensor([&](TensorRef r) {
    for (double& v : r.values) v *= factor;
  });
}

std::vector<TensorShape> tensor_shapes(ModelKind kind, const ModelDims& dims) {
  const std::size_t D = dims.input_dim, Ha = dims.attn_hidden, H = dims.cell_hidden,
                    K = dims.classes;
  std::vector<TensorShape> out;
  if (kind != ModelKind::rnn) {
    out.insert(out.end(), {{"attention.fwd_W", Ha, D},
                           {"attention.fwd_U", Ha, Ha},
                           {"attention.fwd_b", Ha, 1},
                           {"attention.bwd_W", Ha, D},
                           {"attention.bwd_U", Ha, Ha},
                           {"attention.bwd_b", Ha, 1},
                           {"attention.fusion_m", 2 * Ha, 1},
                           {"attention.fusion_b", 1, 1}});
  }
  if (kind == ModelKind::tagm) {
    out.insert(out.end(), {{"cell.W", H, H}, {"cell.U", H, D}, {"cell.b", H, 1}});
  }
  if (kind == ModelKind::rnn) {
    out.insert(out.end(), {{"rnn.W", H, D}, {"rnn.U", H, H}, {"rnn.b", H, 1}});
  }
  if (kind == ModelKind::amnn) {
    out.insert(out.end(), {{"ff.W", H, D}, {"ff.b", H, 1}});
  }
  out.insert(out.end(), {{"head.W", K, H}, {"head.b", K, 1}});
  return out;
}

}  // namespace tagm
