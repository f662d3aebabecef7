// tests/unit/cli-test.cc

// Copyright 2026  The phoneprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "phoneprobe/cli.h"
#include "phoneprobe/synth.h"
#include "unit/test-util.h"

using namespace phoneprobe;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path &p) { return json::parse(slurp(p)); }

// Small synthetic corpus written through the CLI.
struct Corpus {
  phoneprobe::testing::TempDir dir;
  std::string root, archive, alignments;
  Corpus() {
    SynthProfile p = preset_profile("concentrated", 2);
    p.n_utterances = 40;
    p.n_speakers = 8;
    std::ofstream(dir / "profile.json") << to_json(p).dump();
    root = (dir / "syn").string();
    archive = root + "/archive";
    alignments = root + "/alignments.csv";
    REQUIRE(run_cli({"synth", "--profile", (dir / "profile.json").string(), "--out-dir",
                     root}) == 0);
  }
  std::string at(const std::string &name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  phoneprobe::testing::TempDir dir;
  std::string out = (dir / "o").string();
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"probe", "--pooled", dir.path().string(), "--label", "gender",
                 "--bogus", "--out-dir", out}) == 1);
  CHECK(run_cli({"pool", "--archive", (dir / "missing").string(), "--alignments",
                 (dir / "missing.csv").string(), "--out-dir", out}) == 1);
  CHECK(run_cli({"synth", "--preset", "bogus", "--out-dir", out}) == 1);
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("runtime failures exit with 2") {
  phoneprobe::testing::TempDir dir;
  std::ofstream(dir / "file") << "x";
  CHECK(run_cli({"synth", "--preset", "noise", "--out-dir", (dir / "file" / "sub").string()}) ==
        2);
}

TEST_CASE("synth, pool and probe pipeline") {
  Corpus c;
  CHECK(std::filesystem::exists(c.archive + "/manifest.json"));
  CHECK(read_json(c.root + "/run.json")["command"] == "synth");

  REQUIRE(run_cli({"pool", "--archive", c.archive, "--alignments", c.alignments,
                   "--out-dir", c.at("pooled")}) == 0);
  json pool_run = read_json(c.at("pooled") + "/run.json");
  CHECK(pool_run["derived"]["dim"] == 64);
  CHECK(pool_run["derived"]["n_tokens"] == 40 * 24);

  REQUIRE(run_cli({"probe", "--pooled", c.at("pooled"), "--label", "gender", "--c", "1",
                   "--max-iters", "300", "--chance-draws", "20", "--out-dir",
                   c.at("probe")}) == 0);
  json report = read_json(c.at("probe") + "/report.json");
  CHECK(report["label_kind"] == "gender");
  CHECK(report["c"] == 1.0);
  CHECK(report["error_pct"].get<double>() < report["chance_error_pct"].get<double>());
  json run = read_json(c.at("probe") + "/run.json");
  CHECK(run["params"]["train_fraction"] == 0.85);
  CHECK(run["params"]["seed"] == 0);
  CHECK(run.contains("timestamp"));

  CHECK(run_cli({"probe", "--pooled", c.at("pooled"), "--label", "height", "--out-dir",
                 c.at("bad")}) == 1);

  REQUIRE(run_cli({"path", "--pooled", c.at("pooled"), "--label", "gender", "--c-grid",
                   "0.001,1", "--max-iters", "300", "--out-dir", c.at("path")}) == 0);
  CHECK(read_json(c.at("path") + "/path.json")["points"].size() == 2);
}

TEST_CASE("quantize, one-hot pool and ABX pipeline") {
  Corpus c;
  REQUIRE(run_cli({"quantize", "fit", "--fit-on", c.archive, "--k", "8", "--restarts", "1",
                   "--max-frames", "2000", "--out-dir", c.at("km")}) == 0);
  REQUIRE(run_cli({"quantize", "apply", "--model", c.at("km"), "--archive", c.archive,
                   "--out-dir", c.at("ids")}) == 0);
  REQUIRE(run_cli({"pool", "--onehot", "--assign", c.at("ids"), "--alignments",
                   c.alignments, "--out-dir", c.at("oh")}) == 0);
  CHECK(read_json(c.at("oh") + "/run.json")["derived"]["dim"] == 8);
  CHECK(run_cli({"pool", "--onehot", "--alignments", c.alignments, "--out-dir",
                 c.at("oh2")}) == 1);

  REQUIRE(run_cli({"abx", "--assign", c.at("ids"), "--alignments", c.alignments,
                   "--out-dir", c.at("abx")}) == 0);
  json abx = read_json(c.at("abx") + "/abx.json");
  CHECK(abx["mode"] == "onehot");
  CHECK(abx["n_cells"].get<int>() > 0);
  CHECK(run_cli({"abx", "--assign", c.at("ids"), "--archive", c.archive, "--alignments",
                 c.alignments, "--out-dir", c.at("abx2")}) == 1);
}

TEST_CASE("t-SNE writes a map per label and records the effective subset") {
  Corpus c;
  REQUIRE(run_cli({"pool", "--archive", c.archive, "--alignments", c.alignments,
                   "--out-dir", c.at("pooled")}) == 0);
  REQUIRE(run_cli({"tsne", "--pooled", c.at("pooled"), "--subset-n", "100000",
                   "--perplexity", "10", "--iters", "50", "--out-dir", c.at("tsne")}) == 0);
  for (const char *label : {"phone_class", "gender", "language"}) {
    CHECK(std::filesystem::exists(c.at("tsne") + "/scatter_" + label + ".svg"));
    CHECK(std::filesystem::exists(c.at("tsne") + "/scatter_" + label + ".csv"));
  }
  CHECK(read_json(c.at("tsne") + "/run.json")["derived"]["subset_n_effective"] == 960);
}

TEST_CASE("replay reproduces the outputs") {
  Corpus c;
  REQUIRE(run_cli({"pool", "--archive", c.archive, "--alignments", c.alignments,
                   "--out-dir", c.at("pooled")}) == 0);
  REQUIRE(run_cli({"probe", "--pooled", c.at("pooled"), "--label", "language",
                   "--max-iters", "200", "--chance-draws", "20", "--out-dir",
                   c.at("probe")}) == 0);
  std::string report = slurp(c.at("probe") + "/report.json");
  std::string model = slurp(c.at("probe") + "/model.json");
  json run = read_json(c.at("probe") + "/run.json");

  REQUIRE(run_cli({"replay", "--run", c.at("probe") + "/run.json"}) == 0);
  CHECK(slurp(c.at("probe") + "/report.json") == report);
  CHECK(slurp(c.at("probe") + "/model.json") == model);
  json again = read_json(c.at("probe") + "/run.json");
  run.erase("timestamp");
  again.erase("timestamp");
  CHECK(again == run);

  REQUIRE(run_cli({"replay", "--run", c.at("probe") + "/run.json", "--out-dir",
                   c.at("elsewhere")}) == 0);
  CHECK(slurp(c.at("elsewhere") + "/report.json") == report);
}

TEST_CASE("battery writes the three tables") {
  Corpus c;
  std::string spec = "syn:" + c.archive + ":" + c.alignments;
  REQUIRE(run_cli({"battery", "--corpus", spec, "--c-grid", "none,0.01", "--k-list",
                   "4,8", "--max-iters", "200", "--restarts", "1", "--max-frames", "2000",
                   "--chance-draws", "10", "--out-dir", c.at("bat")}) == 0);
  std::string md = slurp(c.at("bat") + "/battery.md");
  CHECK(md.find("| LogReg |") != std::string::npos);
  CHECK(md.find("| LogReg+l1 C=0.01 |") != std::string::npos);
  CHECK(md.find("| Continuous |") != std::string::npos);
  CHECK(md.find("| K4 |") != std::string::npos);
  CHECK(md.find("| K8 |") != std::string::npos);
  CHECK(md.find("| | Continuous | K4 | K8 |") != std::string::npos);
  CHECK(md.find("| syn | ") != std::string::npos);
  json j = read_json(c.at("bat") + "/battery.json");
  REQUIRE(j["corpora"].size() == 1);
  CHECK(run_cli({"battery", "--corpus", "only:two", "--out-dir", c.at("bat2")}) == 1);
}
