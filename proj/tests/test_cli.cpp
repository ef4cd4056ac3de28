// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "tagm/checkpoint.hpp"
#include "tagm/data.hpp"

namespace fs = std::filesystem;
using tagm::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result tagm_run(std::vector<std::string> args) {
  args.insert(args.begin(), "tagm");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tagm_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> small_data_flags(const std::string& out) {
  return {"gen-data", "--out", out, "--classes", "3", "--dim", "4", "--salient-min", "5", "--salient-max", "8",
          "--pad-min", "2", "--pad-max", "4", "--train-count", "30", "--val-count", "10", "--test-count", "10"};
}

}  // namespace

TEST_CASE("params prints the closed-form count") {
  auto r = tagm_run({"params"});
  CHECK(r.code == 0);
  CHECK(r.out == "42251\n");
  r = tagm_run({"params", "--dim", "1", "--attn-hidden", "1", "--cell-hidden", "1", "--classes", "1"});
  CHECK(r.out == "14\n");
}

TEST_CASE("usage errors exit with 2") {
  CHECK(tagm_run({}).code == 2);
  CHECK(tagm_run({"bogus"}).code == 2);
  CHECK(tagm_run({"params", "--dim", "zero"}).code == 2);
  CHECK(tagm_run({"train", "--data", "/nonexistent/file", "--out", "x"}).code == 2);
  CHECK(tagm_run({"gen-data", "--out", "x", "--salient-min", "9", "--salient-max", "3"}).code == 2);
  CHECK(tagm_run({"params", "--help"}).code == 0);
}

TEST_CASE("gen-data, train, eval and salience end to end") {
  TempDir dir;
  const std::string data = dir / "d.tgmd", ckpt = dir / "m.tgmc";
  auto flags = small_data_flags(data);
  flags.insert(flags.end(), {"--csv", dir / "d.csv"});
  auto r = tagm_run(flags);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("50 sequences") != std::string::npos);
  CHECK(fs::exists(dir / "d.csv"));

  r = tagm_run({"train", "--data", data, "--out", ckpt, "--epochs", "3", "--attn-hidden", "3", "--cell-hidden", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("best_epoch ") != std::string::npos);
  CHECK(r.err.find("epoch 3 loss") != std::string::npos);

  // three epoch records plus the final summary line
  std::istringstream log(slurp(ckpt + ".log"));
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(log, line);) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0]["epoch"] == 1);
  CHECK(lines[3]["final"] == true);

  r = tagm_run({"eval", "--checkpoint", ckpt, "--data", data, "--split", "all"});
  REQUIRE(r.code == 0);
  std::istringstream ev(r.out);
  std::vector<nlohmann::json> recs;
  for (std::string line; std::getline(ev, line);) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() == 3);
  CHECK(recs[2]["split"] == "test");
  CHECK(recs[2]["count"] == 10);
  CHECK(recs[1]["value"].get<double>() == doctest::Approx(lines[3]["val_acc"].get<double>()));
  CHECK(recs[2]["value"].get<double>() == doctest::Approx(lines[3]["test_acc"].get<double>()));

  r = tagm_run({"salience", "--checkpoint", ckpt, "--data", data});
  REQUIRE(r.code == 0);
  std::istringstream csv(r.out);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "sample_id,t,a_t,mask,ratio");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  const auto ds = tagm::load_dataset(data);
  std::size_t expected = 0;
  for (auto i : ds.indices(tagm::Split::test)) expected += ds.sequences[i].length();
  CHECK(rows == expected);
}

TEST_CASE("explicit flags override --config values") {
  TempDir dir;
  const std::string data = dir / "d.tgmd";
  REQUIRE(tagm_run(small_data_flags(data)).code == 0);
  {
    std::ofstream cfg(dir / "c.json");
    cfg << R"({"epochs": 2, "attn_hidden": 3, "cell_hidden": 5})";
  }
  auto r = tagm_run({"train", "--config", dir / "c.json", "--data", data, "--out", dir / "m.tgmc", "--cell-hidden", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("H_a=3 H_c=2") != std::string::npos);
  CHECK(r.err.find("epoch 2 loss") != std::string::npos);
  CHECK(r.err.find("epoch 3 loss") == std::string::npos);

  CHECK(tagm_run({"train", "--config", dir / "missing.json", "--data", data, "--out", dir / "m.tgmc"}).code == 2);
}

TEST_CASE("salience rejects the plain RNN; eval rejects a mismatched dataset") {
  TempDir dir;
  const std::string data = dir / "d.tgmd";
  REQUIRE(tagm_run(small_data_flags(data)).code == 0);
  REQUIRE(tagm_run({"train", "--data", data, "--out", dir / "r.tgmc", "--model", "rnn", "--epochs", "1"}).code == 0);
  CHECK(tagm_run({"salience", "--checkpoint", dir / "r.tgmc", "--data", data}).code == 2);

  auto other = small_data_flags(dir / "o.tgmd");
  other[6] = "5";  // --dim
  REQUIRE(tagm_run(other).code == 0);
  auto r = tagm_run({"eval", "--checkpoint", dir / "r.tgmc", "--data", dir / "o.tgmd"});
  CHECK(r.code == 1);
  CHECK(r.err.find("D=4") != std::string::npos);
}

TEST_CASE("same seed gives byte-identical checkpoints regardless of --jobs") {
  TempDir dir;
  const std::string data = dir / "d.tgmd";
  REQUIRE(tagm_run(small_data_flags(data)).code == 0);
  std::vector<std::string> base{"train", "--data", data, "--epochs", "2", "--dropout", "0.25", "--seed", "5"};
  auto a = base, b = base, c = base;
  a.insert(a.end(), {"--out", dir / "a.tgmc"});
  b.insert(b.end(), {"--out", dir / "b.tgmc"});
  c.insert(c.end(), {"--out", dir / "c.tgmc", "--jobs", "3"});
  REQUIRE(tagm_run(a).code == 0);
  REQUIRE(tagm_run(b).code == 0);
  REQUIRE(tagm_run(c).code == 0);
  CHECK(slurp(dir / "a.tgmc") == slurp(dir / "b.tgmc"));
  CHECK(slurp(dir / "a.tgmc") == slurp(dir / "c.tgmc"));
}

TEST_CASE("epochs 0 writes the initialised model") {
  TempDir dir;
  const std::string data = dir / "d.tgmd";
  REQUIRE(tagm_run(small_data_flags(data)).code == 0);
  REQUIRE(tagm_run({"train", "--data", data, "--out", dir / "m.tgmc", "--epochs", "0", "--seed", "8"}).code == 0);
  const auto ck = tagm::load_checkpoint(dir / "m.tgmc");
  CHECK(ck.model == tagm::Model::initialized(tagm::ModelKind::tagm, tagm::ModelDims{4, 16, 16, 3},
                                             tagm::HeadMode::multiclass, 8));
}

TEST_CASE("gradcheck passes, and fails under mutation") {
  auto r = tagm_run({"gradcheck", "--seeds", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  r = tagm_run({"gradcheck", "--seeds", "3", "--corrupt-gradient"});
  CHECK(r.code == 1);
  CHECK(r.out.find("FAIL") != std::string::npos);
  CHECK(tagm_run({"gradcheck", "--seeds", "2", "--model", "amnn"}).code == 0);
}
