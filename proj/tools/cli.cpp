// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tagm/checkpoint.hpp"
#include "tagm/data.hpp"
#include "tagm/error.hpp"
#include "tagm/gradcheck.hpp"
#include "tagm/metrics.hpp"
#include "tagm/training.hpp"

namespace tagm::cli {

namespace {

using nlohmann::json;

/// Bad flag values or combinations detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
  const char* env = std::getenv("TAGM_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a positive integer");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

/// Turns the JSON object in --config FILE into flags placed ahead of the
/// user's own flags; the parser keeps the last occurrence, so explicit
/// flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("--config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("--config: top level must be a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      injected.push_back(flag + "=" + joined);
    } else if (value.is_string()) {
      injected.push_back(flag + "=" + value.get<std::string>());
    } else {
      injected.push_back(flag + "=" + value.dump());
    }
  }
  // args[0] is the program, args[1] the subcommand.
  std::vector<std::string> out(args.begin(), args.begin() + std::min<std::size_t>(2, args.size()));
  out.insert(out.end(), injected.begin(), injected.end());
  if (args.size() > 2) out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--config", c.config, "JSON file whose keys mirror the long flags");
  cmd->add_option("--jobs", c.jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
}

// ---- gen-data ---------------------------------------------------------------

struct GenArgs {
  Common common;
  GenConfig cfg;
  std::string out;
  std::string csv;
  std::string mode = "multiclass";
};

void setup_gen(CLI::App& app, GenArgs& a) {
  auto* cmd = app.add_subcommand("gen-data", "Generate a synthetic noisy-sequence dataset");
  add_common(cmd, a.common);
  cmd->add_option("--out", a.out, "Output dataset file")->required();
  cmd->add_option("--csv", a.csv, "Also export the dataset as CSV");
  cmd->add_option("--classes", a.cfg.classes, "Number of classes");
  cmd->add_option("--dim", a.cfg.dim, "Observation dimension");
  cmd->add_option("--salient-min", a.cfg.salient_min);
  cmd->add_option("--salient-max", a.cfg.salient_max);
  cmd->add_option("--pad-min", a.cfg.pad_min);
  cmd->add_option("--pad-max", a.cfg.pad_max);
  cmd->add_option("--noise-sigma", a.cfg.noise_sigma);
  cmd->add_option("--jitter-sigma", a.cfg.pattern_jitter_sigma);
  cmd->add_option("--amplitude", a.cfg.pattern_amplitude);
  cmd->add_option("--train-count", a.cfg.train_count);
  cmd->add_option("--val-count", a.cfg.val_count);
  cmd->add_option("--test-count", a.cfg.test_count);
  cmd->add_option("--mode", a.mode)->check(CLI::IsMember({"multiclass", "multilabel"}));
}

int cmd_gen_data(GenArgs& a, std::ostream& out) {
  a.cfg.seed = a.common.seed;
  a.cfg.mode = head_mode_from_string(a.mode);
  try {
    a.cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const Dataset ds = generate(a.cfg);
  save_dataset(ds, a.out);
  if (!a.csv.empty()) {
    std::ofstream csv(a.csv);
    if (!csv) throw Error("cannot open '" + a.csv + "' for writing");
    write_dataset_csv(ds, csv);
  }
  const DatasetSummary s = summarize(ds);
  out << "wrote " << a.out << ": " << ds.size() << " sequences (train " << s.train << ", val "
      << s.val << ", test " << s.test << ")\n"
      << "length min " << s.min_length << " mean " << fmt(s.mean_length, 2) << " max "
      << s.max_length << "; mask density " << fmt(s.mean_mask_density) << "\n";
  return kSuccess;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  Common common;
  TrainConfig cfg;
  std::string data;
  std::string out;
  std::string log;
  std::string model = "tagm";
  std::size_t attn_hidden = 16;
  std::size_t cell_hidden = 16;
  double clip = 5.0;
  bool grid = false;
  std::string grid_attn = "64,128,256";
  std::string grid_cell = "64,128,256";
  std::string grid_dropout = "0,0.25,0.5";
};

void setup_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(cmd, a.common);
  cmd->add_option("--data", a.data, "Dataset file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Checkpoint file")->required();
  cmd->add_option("--log", a.log, "Line-delimited JSON training log (default: <out>.log)");
  cmd->add_option("--model", a.model)->check(CLI::IsMember({"tagm", "rnn", "amnn"}));
  cmd->add_option("--attn-hidden", a.attn_hidden)->check(CLI::PositiveNumber);
  cmd->add_option("--cell-hidden", a.cell_hidden)->check(CLI::PositiveNumber);
  cmd->add_option("--learning-rate", a.cfg.learning_rate);
  cmd->add_option("--fusion-lr-multiplier", a.cfg.fusion_lr_multiplier);
  cmd->add_option("--rmsprop-decay", a.cfg.rmsprop_decay);
  cmd->add_option("--rmsprop-epsilon", a.cfg.rmsprop_epsilon);
  cmd->add_option("--clip", a.clip, "Clip gradients elementwise to [-clip, clip]");
  cmd->add_option("--dropout", a.cfg.dropout);
  cmd->add_option("--batch-size", a.cfg.batch_size);
  cmd->add_option("--epochs", a.cfg.epochs);
  cmd->add_option("--patience", a.cfg.patience);
  cmd->add_flag("--grid", a.grid, "Grid-search hidden sizes and dropout on the val split");
  cmd->add_option("--grid-attn", a.grid_attn, "Comma-separated attention sizes");
  cmd->add_option("--grid-cell", a.grid_cell, "Comma-separated cell sizes");
  cmd->add_option("--grid-dropout", a.grid_dropout, "Comma-separated dropout rates");
}

json config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"fusion_lr_multiplier", c.fusion_lr_multiplier},
          {"rmsprop_decay", c.rmsprop_decay}, {"rmsprop_epsilon", c.rmsprop_epsilon},
          {"clip_lo", c.clip_lo},             {"clip_hi", c.clip_hi},
          {"dropout", c.dropout},             {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"patience", c.patience},
          {"seed", c.seed}};
}

int cmd_train(TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig& cfg = a.cfg;
  cfg.seed = a.common.seed;
  cfg.jobs = a.common.jobs;
  if (!(a.clip > 0.0)) throw UsageError("--clip must be positive");
  cfg.clip_lo = -a.clip;
  cfg.clip_hi = a.clip;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const ModelKind kind = model_kind_from_string(a.model);
  const Dataset ds = load_dataset(a.data);
  const LogLevel level = log_level();

  Model model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  if (a.grid) {
    GridSpec grid{parse_sizes(a.grid_attn, "--grid-attn"), parse_sizes(a.grid_cell, "--grid-cell"),
                  parse_doubles(a.grid_dropout, "--grid-dropout")};
    GridResult gr = grid_search(ds, kind, cfg, grid);
    out << "grid: attn_hidden cell_hidden dropout params val_score best_epoch\n";
    for (std::size_t i = 0; i < gr.rows.size(); ++i) {
      const GridRow& r = gr.rows[i];
      out << (i == gr.best ? "* " : "  ") << r.dims.attn_hidden << ' ' << r.dims.cell_hidden << ' '
          << r.dropout << ' ' << r.params << ' ' << fmt(r.val_score) << ' ' << r.best_epoch << '\n';
    }
    cfg.dropout = gr.rows[gr.best].dropout;
    best_epoch = gr.rows[gr.best].best_epoch;
    model = std::move(gr.best_model);
    log = std::move(gr.best_log);
  } else {
    const ModelSpec spec{kind, ModelDims{ds.dim, a.attn_hidden, a.cell_hidden, ds.classes}, ds.mode};
    TrainResult tr = train(ds, spec, cfg);
    model = std::move(tr.model);
    log = std::move(tr.log);
    best_epoch = tr.best_epoch;
  }
  if (level != LogLevel::quiet) {
    for (const auto& r : log) {
      err << "epoch " << r.epoch << " loss " << fmt(r.train_loss) << " train " << fmt(r.train_acc)
          << " val " << fmt(r.val_acc) << '\n';
    }
  }

  const double val = evaluate(model, ds, ds.indices(Split::val), cfg.jobs);
  const auto test_idx = ds.indices(Split::test);
  const double test = test_idx.empty() ? 0.0 : evaluate(model, ds, test_idx, cfg.jobs);

  json extra = {{"train_config", config_json(cfg)},
                {"dataset_config_hash", ds.provenance.config_hash},
                {"best_epoch", best_epoch}};
  save_checkpoint(Checkpoint{model, std::nullopt, extra.dump()}, a.out);

  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream lf(log_path, std::ios::trunc);
  if (!lf) throw Error("cannot open '" + log_path + "' for writing");
  for (const auto& r : log) lf << to_json_line(r) << '\n';
  json final_rec = {{"final", true}, {"best_epoch", best_epoch}, {"val_acc", val}};
  if (!test_idx.empty()) final_rec["test_acc"] = test;
  lf << final_rec.dump() << '\n';

  out << "model " << to_string(kind) << " D=" << model.dims.input_dim
      << " H_a=" << model.dims.attn_hidden << " H_c=" << model.dims.cell_hidden
      << " K=" << model.dims.classes << " params=" << model.param_count() << '\n';
  out << "best_epoch " << best_epoch << " val_acc " << fmt(val) << " test_acc " << fmt(test) << '\n';
  return kSuccess;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::string data;
  std::string split = "test";
};

void setup_eval(CLI::App& app, EvalArgs& a, const std::string& name, const std::string& help) {
  auto* cmd = app.add_subcommand(name, help);
  add_common(cmd, a.common);
  cmd->add_option("--checkpoint", a.checkpoint)->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", a.data)->required()->check(CLI::ExistingFile);
  cmd->add_option("--split", a.split)->check(CLI::IsMember({"train", "val", "test", "all"}));
}

struct Loaded {
  Model model;
  Dataset ds;
};

Loaded load_pair(const EvalArgs& a) {
  Loaded l{load_checkpoint(a.checkpoint).model, load_dataset(a.data)};
  if (l.ds.dim != l.model.dims.input_dim || l.ds.classes != l.model.dims.classes ||
      l.ds.mode != l.model.head_mode) {
    throw ShapeError("checkpoint expects D=" + std::to_string(l.model.dims.input_dim) +
                     ", K=" + std::to_string(l.model.dims.classes) + " (" +
                     to_string(l.model.head_mode) + ") but dataset has D=" +
                     std::to_string(l.ds.dim) + ", K=" + std::to_string(l.ds.classes) + " (" +
                     to_string(l.ds.mode) + ")");
  }
  return l;
}

std::vector<Split> requested_splits(const std::string& s) {
  if (s == "all") return {Split::train, Split::val, Split::test};
  if (s == "train") return {Split::train};
  if (s == "val") return {Split::val};
  return {Split::test};
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Loaded l = load_pair(a);
  const bool multiclass = l.model.head_mode == HeadMode::multiclass;
  for (Split split : requested_splits(a.split)) {
    const auto idx = l.ds.indices(split);
    json rec = {{"split", to_string(split)}, {"count", idx.size()}};
    rec["metric"] = multiclass ? "accuracy" : "mean_ap";
    rec["value"] = evaluate(l.model, l.ds, idx, a.common.jobs);
    if (!multiclass) {
      // Per-class AP.
      std::vector<Vector> probs;
      for (auto i : idx) probs.push_back(infer(l.ds.sequences[i].x, l.model).probs);
      json per_class = json::array();
      for (std::size_t k = 0; k < l.ds.classes; ++k) {
        std::vector<double> scores;
        std::vector<std::uint8_t> rel;
        for (std::size_t j = 0; j < idx.size(); ++j) {
          scores.push_back(probs[j][k]);
          rel.push_back(l.ds.sequences[idx[j]].label.targets[k]);
        }
        const auto ap = average_precision(scores, rel);
        per_class.push_back(ap ? json(*ap) : json(nullptr));
      }
      rec["per_class_ap"] = per_class;
    }
    out << rec.dump() << '\n';
  }
  return kSuccess;
}

// ---- salience ---------------------------------------------------------------

struct SalienceArgs {
  EvalArgs eval;
  std::string out;
};

int cmd_salience(const SalienceArgs& a, std::ostream& out, std::ostream& err) {
  const Loaded l = load_pair(a.eval);
  if (l.model.kind == ModelKind::rnn) {
    throw UsageError("salience: the plain RNN has no attention module");
  }
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::trunc);
    if (!file) throw Error("cannot open '" + a.out + "' for writing");
  }
  std::ostream& csv = a.out.empty() ? out : file;
  std::ostringstream summary;

  std::vector<std::size_t> idx;
  for (Split s : requested_splits(a.eval.split)) {
    const auto part = l.ds.indices(s);
    idx.insert(idx.end(), part.begin(), part.end());
  }
  bool masks = !idx.empty();
  for (auto i : idx) masks = masks && l.ds.sequences[i].has_mask();

  csv << (masks ? "sample_id,t,a_t,mask,ratio\n" : "sample_id,t,a_t\n");
  csv << std::setprecision(17);
  std::vector<double> ratios;
  std::size_t masked = 0;
  for (auto i : idx) {
    const Sequence& s = l.ds.sequences[i];
    const Vector a_t = infer(s.x, l.model).salience;
    std::string ratio_text;
    if (masks) {
      ++masked;
      if (auto r = localization_ratio(a_t, s.mask)) {
        ratios.push_back(*r);
        std::ostringstream rs;
        rs << std::setprecision(17) << *r;
        ratio_text = rs.str();
      }
    }
    for (std::size_t t = 0; t < s.length(); ++t) {
      csv << i << ',' << t << ',' << a_t[t];
      if (masks) csv << ',' << static_cast<int>(s.mask[t]) << ',' << ratio_text;
      csv << '\n';
    }
  }
  if (!ratios.empty()) {
    std::size_t above = 0;
    for (double r : ratios) above += r >= 2.0;
    // undefined ratios (no attention anywhere) count as misses
    summary << "localization ratio: median " << fmt(median(ratios)) << ", >= 2 for " << above
            << "/" << masked << " sequences\n";
  }
  // Keep stdout pure CSV when the traces go there.
  (a.out.empty() ? err : out) << summary.str();
  return kSuccess;
}

// ---- params / gradcheck -----------------------------------------------------

struct DimsArgs {
  Common common;
  std::string model = "tagm";
  ModelDims dims{13, 128, 64, 10};
};

void add_dims(CLI::App* cmd, DimsArgs& a) {
  add_common(cmd, a.common);
  cmd->add_option("--model", a.model)->check(CLI::IsMember({"tagm", "rnn", "amnn"}));
  cmd->add_option("--dim", a.dims.input_dim)->check(CLI::PositiveNumber);
  cmd->add_option("--attn-hidden", a.dims.attn_hidden)->check(CLI::PositiveNumber);
  cmd->add_option("--cell-hidden", a.dims.cell_hidden)->check(CLI::PositiveNumber);
  cmd->add_option("--classes", a.dims.classes)->check(CLI::PositiveNumber);
}

int cmd_params(const DimsArgs& a, std::ostream& out) {
  out << param_count(model_kind_from_string(a.model), a.dims) << '\n';
  return kSuccess;
}

struct GradArgs {
  DimsArgs dims;
  std::size_t seeds = 20;
  std::size_t length = 5;
  bool multilabel = false;
  bool corrupt = false;
};

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  GradCheckOptions opt;
  opt.kind = model_kind_from_string(a.dims.model);
  opt.dims = a.dims.dims;
  opt.length = a.length;
  opt.mode = a.multilabel ? HeadMode::multilabel : HeadMode::multiclass;
  opt.corrupt = a.corrupt;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(a.dims.common.seed + i);
  const GradCheckReport rep = gradient_check(opt, seeds);
  for (const auto& s : rep.seeds) {
    out << "seed " << s.seed << ": max_rel_error " << std::scientific << std::setprecision(3)
        << s.max_rel_error << std::defaultfloat << " at " << s.worst_tensor << '[' << s.worst_index
        << "] over " << s.coordinates << " coordinates" << (s.passed ? "" : "  FAIL") << '\n';
  }
  out << (rep.passed ? "PASS" : "FAIL") << ": max relative error " << std::scientific
      << std::setprecision(3) << rep.max_rel_error << std::defaultfloat << " (tolerance "
      << opt.tolerance << ")\n";
  return rep.passed ? kSuccess : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal attention-gated sequence classifier", "tagm"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  GenArgs gen;
  TrainArgs tr;
  EvalArgs ev;
  SalienceArgs sal;
  DimsArgs params;
  GradArgs grad;
  grad.dims.dims = ModelDims{3, 4, 3, 3};

  setup_gen(app, gen);
  setup_train(app, tr);
  setup_eval(app, ev, "eval", "Evaluate a checkpoint on a dataset split");
  setup_eval(app, sal.eval, "salience", "Export per-timestep attention as CSV");
  app.get_subcommand("salience")->add_option("--out", sal.out, "CSV file (default: stdout)");
  add_dims(app.add_subcommand("params", "Print the parameter count for given dims"), params);
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_dims(gc, grad.dims);
  gc->add_option("--seeds", grad.seeds, "Number of random instances");
  gc->add_option("--length", grad.length, "Sequence length")->check(CLI::PositiveNumber);
  gc->add_flag("--multilabel", grad.multilabel, "Use the sigmoid head with joint BCE");
  gc->add_flag("--corrupt-gradient", grad.corrupt,
               "Debug: perturb one analytic coordinate by 1% (must fail)");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "usage error: " << e.what() << '\n';
      return kUsage;
    }

    if (app.got_subcommand("gen-data")) return cmd_gen_data(gen, out);
    if (app.got_subcommand("train")) return cmd_train(tr, out, err);
    if (app.got_subcommand("eval")) return cmd_eval(ev, out);
    if (app.got_subcommand("salience")) return cmd_salience(sal, out, err);
    if (app.got_subcommand("params")) return cmd_params(params, out);
    if (app.got_subcommand("gradcheck")) return cmd_gradcheck(grad, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace tagm::cli
