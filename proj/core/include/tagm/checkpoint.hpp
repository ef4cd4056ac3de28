// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "tagm/model.hpp"
#include "tagm/training.hpp"

namespace tagm {

inline constexpr char kCheckpointMagic[4] = {'T', 'G', 'M', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::optional<RmspropState> optimizer;
  /// Free-form JSON object stored alongside (training config, dataset hash...).
  std::string extra = "{}";
};

/// Layout: 16-byte header whose payload length is exactly
/// param_count·8, u64-prefixed JSON metadata, the parameter tensors in
/// Model::for_each_tensor order, then (optionally) the RMSprop
/// accumulators in the same order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
void save_checkpoint(const Model& model, const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As above, but rejects a checkpoint whose kind or dims differ from the
/// expectation.
Checkpoint load_checkpoint(const std::filesystem::path& path, ModelKind kind,
                           const ModelDims& dims);

}  // namespace tagm
