// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tagm/heads.hpp"
#include "tagm/numerics.hpp"

namespace tagm {

/// One observation sequence: T rows of dimension D, its label, and an
/// optional ground-truth salience mask (1 = class-relevant timestep).
struct Sequence {
  Matrix x;
  Label label;
  std::vector<std::uint8_t> mask;

  std::size_t length() const { return x.rows(); }
  bool has_mask() const { return !mask.empty(); }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

const char* to_string(Split split);

/// Synthetic noisy-sequence generator settings.
///
/// Each sample embeds a class template (a D-channel sinusoid of frequency
/// (k+1)/(2·salient_max) with channel phase d·π/D, plus Gaussian jitter)
/// between white-noise prefix and suffix segments of random length.
struct GenConfig {
  std::size_t classes = 10;
  std::size_t dim = 13;
  std::size_t salient_min = 20;
  std::size_t salient_max = 40;
  std::size_t pad_min = 10;
  std::size_t pad_max = 30;
  double noise_sigma = 0.5;
  double pattern_jitter_sigma = 0.1;
  double pattern_amplitude = 2.0;
  std::size_t train_count = 3000;
  std::size_t val_count = 500;
  std::size_t test_count = 1500;
  std::uint64_t seed = 0;
  HeadMode mode = HeadMode::multiclass;

  /// Throws Error describing the first invalid field.
  void validate() const;
  std::string to_json() const;
  std::uint64_t hash() const;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string generator;  // JSON text of the GenConfig, or empty

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  HeadMode mode = HeadMode::multiclass;
  std::vector<Sequence> sequences;
  std::vector<Split> splits;  // parallel to sequences
  Provenance provenance;

  std::size_t size() const { return sequences.size(); }
  std::vector<std::size_t> indices(Split split) const;

  /// Checks shared dimension, label ranges, mask lengths and split sizes.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Class template of length `length` for class `k`, without jitter.
Matrix class_template(std::size_t k, std::size_t dim, std::size_t length,
                      std::size_t salient_max, double amplitude);

Dataset generate(const GenConfig& cfg);

/// Copy containing only the first `count` training sequences (val/test kept).
Dataset subsample_train(const Dataset& ds, std::size_t count);

// Binary formats: 16-byte header (4-byte magic, u32 version, u64 payload
// length), u64-length-prefixed UTF-8 JSON metadata, then the payload of
// little-endian binary64 values.
inline constexpr char kDatasetMagic[4] = {'T', 'G', 'M', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// One row per timestep: sample_id,split,t,x_1..x_D,label,mask
void write_dataset_csv(const Dataset& ds, std::ostream& out);

struct DatasetSummary {
  std::size_t train = 0, val = 0, test = 0;
  std::size_t min_length = 0, max_length = 0;
  double mean_length = 0.0;
  double mean_mask_density = 0.0;  // over sequences that carry a mask
};
DatasetSummary summarize(const Dataset& ds);

}  // namespace tagm
