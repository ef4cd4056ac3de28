// SPDX-License-Identifier: Apache-2.0
#include "tagm/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include <json.hpp>

#include "binary_io.hpp"
#include "tagm/error.hpp"
#include "tagm/random.hpp"

namespace tagm {

using nlohmann::json;

const char* to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "?";
}

void GenConfig::validate() const {
  if (classes == 0) throw Error("GenConfig: classes must be positive");
  if (dim == 0) throw Error("GenConfig: dim must be positive");
  if (salient_min == 0 || salient_min > salient_max) {
    throw Error("GenConfig: salient length range [" + std::to_string(salient_min) + ", " +
                std::to_string(salient_max) + "] is empty or starts at 0");
  }
  if (pad_min > pad_max) {
    throw Error("GenConfig: pad length range [" + std::to_string(pad_min) + ", " +
                std::to_string(pad_max) + "] is empty");
  }
  if (!(noise_sigma >= 0.0) || !(pattern_jitter_sigma >= 0.0)) {
    throw Error("GenConfig: noise and jitter sigmas must be non-negative");
  }
  if (!(pattern_amplitude > 0.0)) throw Error("GenConfig: pattern amplitude must be positive");
  if (train_count + val_count + test_count == 0) throw Error("GenConfig: no samples requested");
  if (mode == HeadMode::multilabel && classes < 2) {
    throw Error("GenConfig: multilabel mode needs at least 2 classes");
  }
}

std::string GenConfig::to_json() const {
  json j = {{"classes", classes},
            {"dim", dim},
            {"salient_min", salient_min},
            {"salient_max", salient_max},
            {"pad_min", pad_min},
            {"pad_max", pad_max},
            {"noise_sigma", noise_sigma},
            {"pattern_jitter_sigma", pattern_jitter_sigma},
            {"pattern_amplitude", pattern_amplitude},
            {"train_count", train_count},
            {"val_count", val_count},
            {"test_count", test_count},
            {"seed", seed},
            {"mode", tagm::to_string(mode)}};
  return j.dump();
}

std::uint64_t GenConfig::hash() const {
  // FNV-1a over the canonical JSON text
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

void Dataset::validate() const {
  if (splits.size() != sequences.size()) {
    throw Error("Dataset: " + std::to_string(splits.size()) + " split tags for " +
                std::to_string(sequences.size()) + " sequences");
  }
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const Sequence& s = sequences[i];
    const std::string where = "Dataset: sequence " + std::to_string(i);
    if (s.length() == 0) throw Error(where + " is empty");
    if (s.x.cols() != dim) {
      throw ShapeError(where + " has dimension " + std::to_string(s.x.cols()) + ", expected " +
                       std::to_string(dim));
    }
    if (s.has_mask() && s.mask.size() != s.length()) throw Error(where + ": mask length mismatch");
    validate_label(s.label, mode, classes);
  }
}

Matrix class_template(std::size_t k, std::size_t dim, std::size_t length,
                      std::size_t salient_max, double amplitude) {
  const double freq = static_cast<double>(k + 1) / (2.0 * static_cast<double>(salient_max));
  Matrix m(length, dim);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double phase = static_cast<double>(d) * std::numbers::pi / static_cast<double>(dim);
      m(t, d) = amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) + phase);
    }
  }
  return m;
}

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Segment {
  bool salient = false;
  std::size_t cls = 0;
  std::size_t length = 0;
};

Sequence make_sample(const GenConfig& cfg, std::uint64_t index) {
  std::mt19937_64 rng(splitmix64(cfg.seed ^ index));
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> events;
  if (cfg.mode == HeadMode::multiclass) {
    events.push_back(draw(rng, 0, cfg.classes - 1));
  } else {
    const std::size_t count = draw(rng, 1, 2);
    while (events.size() < count) {
      const std::size_t k = draw(rng, 0, cfg.classes - 1);
      if (std::find(events.begin(), events.end(), k) == events.end()) events.push_back(k);
    }
  }

  std::vector<Segment> layout;
  layout.push_back({false, 0, draw(rng, cfg.pad_min, cfg.pad_max)});
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (e > 0) layout.push_back({false, 0, draw(rng, cfg.pad_min, cfg.pad_max)});
    layout.push_back({true, events[e], draw(rng, cfg.salient_min, cfg.salient_max)});
  }
  layout.push_back({false, 0, draw(rng, cfg.pad_min, cfg.pad_max)});

  std::size_t T = 0;
  for (const auto& s : layout) T += s.length;

  Sequence seq;
  seq.x = Matrix(T, cfg.dim);
  seq.mask.assign(T, 0);
  std::size_t t0 = 0;
  for (const auto& s : layout) {
    if (s.salient) {
      const Matrix tmpl =
          class_template(s.cls, cfg.dim, s.length, cfg.salient_max, cfg.pattern_amplitude);
      for (std::size_t t = 0; t < s.length; ++t) {
        seq.mask[t0 + t] = 1;
        for (std::size_t d = 0; d < cfg.dim; ++d) {
          seq.x(t0 + t, d) = tmpl(t, d) + cfg.pattern_jitter_sigma * unit(rng);
        }
      }
    } else {
      for (std::size_t t = 0; t < s.length; ++t) {
        for (std::size_t d = 0; d < cfg.dim; ++d) seq.x(t0 + t, d) = cfg.noise_sigma * unit(rng);
      }
    }
    t0 += s.length;
  }

  if (cfg.mode == HeadMode::multiclass) {
    seq.label = Label::single(events.front());
  } else {
    std::vector<std::uint8_t> targets(cfg.classes, 0);
    for (auto k : events) targets[k] = 1;
    seq.label = Label::multi(std::move(targets));
  }
  return seq;
}

}  // namespace

Dataset generate(const GenConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.dim = cfg.dim;
  ds.classes = cfg.classes;
  ds.mode = cfg.mode;
  ds.provenance = Provenance{cfg.seed, cfg.hash(), cfg.to_json()};
  const std::size_t n = cfg.train_count + cfg.val_count + cfg.test_count;
  ds.sequences.reserve(n);
  ds.splits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.sequences.push_back(make_sample(cfg, i));
    ds.splits.push_back(i < cfg.train_count                   ? Split::train
                        : i < cfg.train_count + cfg.val_count ? Split::val
                                                              : Split::test);
  }
  return ds;
}

Dataset subsample_train(const Dataset& ds, std::size_t count) {
  Dataset out;
  out.dim = ds.dim;
  out.classes = ds.classes;
  out.mode = ds.mode;
  out.provenance = ds.provenance;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.splits[i] == Split::train) {
      if (kept == count) continue;
      ++kept;
    }
    out.sequences.push_back(ds.sequences[i]);
    out.splits.push_back(ds.splits[i]);
  }
  return out;
}

// ---- persistence -----------------------------------------------------------

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  json meta = {{"dim", ds.dim},
               {"classes", ds.classes},
               {"mode", tagm::to_string(ds.mode)},
               {"count", ds.size()},
               {"provenance",
                {{"seed", ds.provenance.seed},
                 {"config_hash", ds.provenance.config_hash},
                 {"generator", ds.provenance.generator}}}};

  // Per sequence: [T, split, has_mask, label_index], K targets (multilabel
  // only), T mask values (if present), T·D observations.
  io::Writer w;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    w.f64(static_cast<double>(s.length()));
    w.f64(static_cast<double>(ds.splits[i]));
    w.f64(s.has_mask() ? 1.0 : 0.0);
    w.f64(ds.mode == HeadMode::multiclass ? static_cast<double>(s.label.index) : -1.0);
    if (ds.mode == HeadMode::multilabel) {
      for (auto t : s.label.targets) w.f64(t);
    }
    for (auto m : s.mask) w.f64(m);
    w.f64s(s.x.values());
  }
  io::write_container(path, kDatasetMagic, kDatasetVersion, meta.dump(), w.buffer());
}

namespace {

std::size_t as_count(double v, const std::string& what, std::size_t limit) {
  if (!(v >= 0.0) || v != std::floor(v) || v > static_cast<double>(limit)) {
    throw FormatError(what + ": invalid value " + std::to_string(v));
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  io::Container c = io::read_container(path, kDatasetMagic, kDatasetVersion, "dataset");
  Dataset ds;
  std::size_t count = 0;
  try {
    const json meta = json::parse(c.metadata);
    ds.dim = meta.at("dim").get<std::size_t>();
    ds.classes = meta.at("classes").get<std::size_t>();
    ds.mode = head_mode_from_string(meta.at("mode").get<std::string>());
    count = meta.at("count").get<std::size_t>();
    const auto& prov = meta.at("provenance");
    ds.provenance.seed = prov.at("seed").get<std::uint64_t>();
    ds.provenance.config_hash = prov.at("config_hash").get<std::uint64_t>();
    ds.provenance.generator = prov.at("generator").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("dataset '" + path.string() + "': bad metadata: " + e.what());
  }
  if (ds.dim == 0) throw FormatError("dataset '" + path.string() + "': zero dimension");

  io::Reader r(c.payload, "dataset '" + path.string() + "' payload");
  // Every sequence needs at least 4 header values plus one observation row.
  if (count > c.payload.size() / (8 * (4 + ds.dim))) {
    throw FormatError("dataset '" + path.string() + "': declares " + std::to_string(count) +
                      " sequences but the payload holds at most " +
                      std::to_string(c.payload.size() / (8 * (4 + ds.dim))));
  }
  ds.sequences.reserve(count);
  ds.splits.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string where = "dataset '" + path.string() + "' sequence " + std::to_string(i);
    const std::size_t T = as_count(r.f64(), where + " length", r.remaining() / 8);
    const std::size_t split = as_count(r.f64(), where + " split", 2);
    const std::size_t has_mask = as_count(r.f64(), where + " mask flag", 1);
    const double label = r.f64();
    Sequence s;
    if (ds.mode == HeadMode::multiclass) {
      s.label = Label::single(as_count(label, where + " label", ds.classes));
    } else {
      std::vector<std::uint8_t> targets(ds.classes);
      for (auto& t : targets) t = static_cast<std::uint8_t>(as_count(r.f64(), where + " target", 1));
      s.label = Label::multi(std::move(targets));
    }
    if (has_mask) {
      s.mask.resize(T);
      for (auto& m : s.mask) m = static_cast<std::uint8_t>(as_count(r.f64(), where + " mask", 1));
    }
    if (T > r.remaining() / 8 / ds.dim) {
      throw FormatError(where + ": expected " + std::to_string(T * ds.dim * 8) +
                        " observation bytes, " + std::to_string(r.remaining()) + " available");
    }
    s.x = Matrix(T, ds.dim);
    r.f64s(s.x.values());
    ds.sequences.push_back(std::move(s));
    ds.splits.push_back(static_cast<Split>(split));
  }
  if (r.remaining() != 0) {
    throw FormatError("dataset '" + path.string() + "': " + std::to_string(r.remaining()) +
                      " trailing payload bytes");
  }
  try {
    ds.validate();
  } catch (const Error& e) {
    throw FormatError("dataset '" + path.string() + "': " + e.what());
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  out << "sample_id,split,t";
  for (std::size_t d = 0; d < ds.dim; ++d) out << ",x_" << (d + 1);
  out << ",label,mask\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    std::string label;
    if (ds.mode == HeadMode::multiclass) {
      label = std::to_string(s.label.index);
    } else {
      for (std::size_t k = 0; k < s.label.targets.size(); ++k) {
        if (!s.label.targets[k]) continue;
        if (!label.empty()) label += ';';
        label += std::to_string(k);
      }
    }
    for (std::size_t t = 0; t < s.length(); ++t) {
      out << i << ',' << to_string(ds.splits[i]) << ',' << t;
      for (double v : s.x.row(t)) out << ',' << v;
      out << ',' << label << ',';
      if (s.has_mask()) out << static_cast<int>(s.mask[t]);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

DatasetSummary summarize(const Dataset& ds) {
  DatasetSummary s;
  if (ds.size() == 0) return s;
  s.min_length = ds.sequences.front().length();
  std::size_t masked = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& q = ds.sequences[i];
    switch (ds.splits[i]) {
      case Split::train: ++s.train; break;
      case Split::val: ++s.val; break;
      case Split::test: ++s.test; break;
    }
    s.min_length = std::min(s.min_length, q.length());
    s.max_length = std::max(s.max_length, q.length());
    total += static_cast<double>(q.length());
    if (q.has_mask()) {
      ++masked;
      std::size_t on = 0;
      for (auto m : q.mask) on += m;
      s.mean_mask_density += static_cast<double>(on) / static_cast<double>(q.length());
    }
  }
  s.mean_length = total / static_cast<double>(ds.size());
  if (masked) s.mean_mask_density /= static_cast<double>(masked);
  return s;
}

}  // namespace tagm
