// SPDX-License-Identifier: Apache-2.0
#include "tagm/checkpoint.hpp"

#include <json.hpp>

#include "binary_io.hpp"
#include "tagm/error.hpp"

namespace tagm {

using nlohmann::json;

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  save_checkpoint(Checkpoint{model, std::nullopt, "{}"}, path);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const Model& m = ckpt.model;
  json shapes = json::array();
  for (const auto& s : tensor_shapes(m.kind, m.dims)) {
    shapes.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
  }
  json meta = {{"kind", to_string(m.kind)},
               {"head_mode", to_string(m.head_mode)},
               {"dims",
                {{"input_dim", m.dims.input_dim},
                 {"attn_hidden", m.dims.attn_hidden},
                 {"cell_hidden", m.dims.cell_hidden},
                 {"classes", m.dims.classes}}},
               {"param_count", m.param_count()},
               {"init_scheme", kInitScheme},
               {"init_seed", m.init_seed},
               {"tensors", shapes},
               {"optimizer_state", ckpt.optimizer.has_value()},
               {"extra", json::parse(ckpt.extra)}};

  io::Writer payload;
  m.for_each_tensor([&](ConstTensorRef r) { payload.f64s(r.values); });
  if (payload.size() != m.param_count() * 8) {
    throw ShapeError("save_checkpoint: tensors hold " + std::to_string(payload.size() / 8) +
                     " values, dims imply " + std::to_string(m.param_count()));
  }
  io::Writer trailer;
  if (ckpt.optimizer) {
    ckpt.optimizer->mean_square.for_each_tensor([&](ConstTensorRef r) { trailer.f64s(r.values); });
    if (trailer.size() != payload.size()) {
      throw ShapeError("save_checkpoint: optimizer state does not mirror the model");
    }
  }
  io::write_container(path, kCheckpointMagic, kCheckpointVersion, meta.dump(), payload.buffer(),
                      trailer.buffer());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::Container c = io::read_container(path, kCheckpointMagic, kCheckpointVersion, "checkpoint");
  const std::string where = "checkpoint '" + path.string() + "'";
  Checkpoint ckpt;
  bool has_optimizer = false;
  json tensors;
  try {
    const json meta = json::parse(c.metadata);
    const ModelKind kind = model_kind_from_string(meta.at("kind").get<std::string>());
    const HeadMode mode = head_mode_from_string(meta.at("head_mode").get<std::string>());
    const auto& d = meta.at("dims");
    ModelDims dims{d.at("input_dim").get<std::size_t>(), d.at("attn_hidden").get<std::size_t>(),
                   d.at("cell_hidden").get<std::size_t>(), d.at("classes").get<std::size_t>()};
    if (meta.at("init_scheme").get<std::string>() != kInitScheme) {
      throw FormatError(where + ": unknown init scheme");
    }
    if (meta.at("param_count").get<std::size_t>() != param_count(kind, dims)) {
      throw FormatError(where + ": declared parameter count disagrees with declared dims");
    }
    if (c.payload.size() != param_count(kind, dims) * 8) {
      throw FormatError(where + ": payload holds " + std::to_string(c.payload.size()) +
                        " bytes, dims imply " + std::to_string(param_count(kind, dims) * 8));
    }
    ckpt.model = Model::zeros(kind, dims, mode);
    ckpt.model.init_seed = meta.at("init_seed").get<std::uint64_t>();
    has_optimizer = meta.at("optimizer_state").get<bool>();
    tensors = meta.at("tensors");
    ckpt.extra = meta.at("extra").dump();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad metadata: " + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(where + ": " + e.what());
  }

  const auto expected = tensor_shapes(ckpt.model.kind, ckpt.model.dims);
  if (tensors.size() != expected.size()) throw FormatError(where + ": tensor list mismatch");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& t = tensors[i];
    if (t.value("name", "") != expected[i].name || t.value("rows", 0u) != expected[i].rows ||
        t.value("cols", 0u) != expected[i].cols) {
      throw FormatError(where + ": tensor " + expected[i].name +
                        " shape disagrees with the declared dims");
    }
  }

  io::Reader r(c.payload, where + " payload");
  ckpt.model.for_each_tensor([&](TensorRef t) { r.f64s(t.values); });
  if (has_optimizer) {
    RmspropState st = RmspropState::for_model(ckpt.model);
    io::Reader tr(c.trailer, where + " optimizer state");
    st.mean_square.for_each_tensor([&](TensorRef t) { tr.f64s(t.values); });
    if (tr.remaining() != 0) throw FormatError(where + ": trailing bytes after optimizer state");
    ckpt.optimizer = std::move(st);
  } else if (!c.trailer.empty()) {
    throw FormatError(where + ": " + std::to_string(c.trailer.size()) + " unexpected trailing bytes");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, ModelKind kind,
                           const ModelDims& dims) {
  Checkpoint c = load_checkpoint(path);
  ModelDims want = dims;
  if (kind == ModelKind::rnn) want.attn_hidden = 0;
  if (c.model.kind != kind || !(c.model.dims == want)) {
    throw ShapeError("checkpoint '" + path.string() + "' holds a " + to_string(c.model.kind) +
                     " model with dims (" + std::to_string(c.model.dims.input_dim) + "," +
                     std::to_string(c.model.dims.attn_hidden) + "," +
                     std::to_string(c.model.dims.cell_hidden) + "," +
                     std::to_string(c.model.dims.classes) + "), expected " + to_string(kind) +
                     " (" + std::to_string(want.input_dim) + "," + std::to_string(want.attn_hidden) +
                     "," + std::to_string(want.cell_hidden) + "," + std::to_string(want.classes) +
                     ")");
  }
  return c;
}

}  // namespace tagm
