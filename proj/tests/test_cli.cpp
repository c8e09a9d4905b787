// Copyright 2026 The serboost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "ser/features.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using ser::read_text_file;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result ser_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ser");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = ser::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

nlohmann::json error_json(const Result& r) { return nlohmann::json::parse(r.err); }

// Shared small workspace: extract once, reuse in later cases.
const fs::path& workspace() {
  static const fs::path dir = [] {
    auto d = ser::testing::temp_dir("cli_ws");
    const auto r = ser_cli({"extract", "--synth", "10", "--seed", "7", "--out", d.string(), "--cv-folds", "2"});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

const std::vector<std::string> kFast = {"--families", "ET,LDA", "--cv-folds", "2", "--m", "40", "--shap-background",
                                        "10", "--shap-permutations", "5", "--p", "5", "--min-features", "20"};

std::vector<std::string> with_fast(std::vector<std::string> args) {
  args.insert(args.end(), kFast.begin(), kFast.end());
  return args;
}

}  // namespace

TEST_CASE("extract: row count and byte-identical reruns") {
  const auto a = ser::testing::temp_dir("cli_extract_a");
  const auto r1 = ser_cli({"extract", "--synth", "10", "--seed", "7", "--out", a.string()});
  REQUIRE(r1.code == 0);
  const auto csv = read_text_file(a / "features.csv");
  CHECK(line_count(csv) == 71);
  CHECK(line_count(read_text_file(a / "manifest.csv")) == 71);
  CHECK(nlohmann::json::parse(read_text_file(a / "catalog.json")).contains("schema_version"));
  CHECK(r1.out.find("reduced to 8 folds") != std::string::npos);
  const auto r2 = ser_cli({"extract", "--synth", "10", "--seed", "7", "--out", a.string(), "--threads", "2"});
  REQUIRE(r2.code == 0);
  CHECK(read_text_file(a / "features.csv") == csv);
}

TEST_CASE("extract: missing corpus root") {
  const auto r = ser_cli({"extract", "--tess", "/nonexistent/serboost", "--out",
                          ser::testing::temp_dir("cli_missing").string()});
  CHECK(r.code == 2);
  const auto j = error_json(r);
  CHECK(j["error"] == "dataset_not_found");
  CHECK(j["module"] == "dataset");
  CHECK(j.contains("message"));
}

TEST_CASE("usage and config errors") {
  CHECK(ser_cli({}).code == 2);
  const auto bad_flag = ser_cli({"extract", "--bogus"});
  CHECK(bad_flag.code == 2);
  CHECK(error_json(bad_flag)["error"] == "usage");
  CHECK(ser_cli({"extract", "--out", ser::testing::temp_dir("cli_nosrc").string()}).code == 2);
  CHECK(ser_cli({"extract", "--synth", "2", "--tess", "/tmp"}).code == 2);
  CHECK(ser_cli({"run", "--synth", "2", "--families", "SVM"}).code == 2);

  const auto dir = ser::testing::temp_dir("cli_cfg");
  ser::write_text_file(dir / "bad.json", "{\"synth\": 3, \"colour\": \"blue\"}");
  const auto r = ser_cli({"extract", "--config", (dir / "bad.json").string()});
  CHECK(r.code == 2);
  CHECK(error_json(r)["error"] == "invalid_config");
}

TEST_CASE("config file with flag override") {
  const auto dir = ser::testing::temp_dir("cli_cfg2");
  ser::write_text_file(dir / "cfg.json", "{\"synth\": 10, \"seed\": 7, \"out\": \"" + (dir / "a").string() + "\"}");
  REQUIRE(ser_cli({"extract", "--config", (dir / "cfg.json").string()}).code == 0);
  REQUIRE(ser_cli({"extract", "--config", (dir / "cfg.json").string(), "--seed", "8", "--out", (dir / "b").string()})
              .code == 0);
  CHECK(read_text_file(dir / "a" / "features.csv") == read_text_file(workspace() / "features.csv"));
  CHECK(read_text_file(dir / "b" / "features.csv") != read_text_file(dir / "a" / "features.csv"));
}

TEST_CASE("boost: selection report, range checks, round trip") {
  const auto ws = workspace().string();
  const auto r = ser_cli({"boost", "--out", ws, "--seed", "7"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("selected ", 0) == 0);
  CHECK(r.out.rfind("selected 0 ", 0) != 0);
  CHECK(fs::exists(workspace() / "biplot_scores.csv"));
  CHECK(read_text_file(workspace() / "biplot_loadings.csv").rfind("feature,", 0) == 0);
  CHECK(nlohmann::json::parse(read_text_file(workspace() / "boostset.json"))["schema_version"] == 1);

  const auto hi = ser_cli({"boost", "--out", ws, "--alpha", "1.01"});
  CHECK(hi.code == 2);
  CHECK(error_json(hi)["error"] == "invalid_config");

  const auto none = ser_cli({"boost", "--out", ws, "--alpha", "0.999"});
  CHECK(none.code == 3);
  CHECK(error_json(none)["error"] == "empty_selection");
  CHECK(error_json(none).contains("hint"));

  const auto other = ser::testing::temp_dir("cli_boost_rt");
  const auto again = ser_cli({"boost", "--out", other.string(), "--features", (workspace() / "features.csv").string(),
                              "--boostset", (workspace() / "boostset.json").string()});
  REQUIRE(again.code == 0);
  CHECK(read_text_file(other / "boosted.csv") == read_text_file(workspace() / "boosted.csv"));
}

TEST_CASE("train then explain") {
  const auto ws = workspace().string();
  REQUIRE(ser_cli({"boost", "--out", ws, "--seed", "7"}).code == 0);
  const auto t = ser_cli(with_fast({"train", "--out", ws, "--seed", "7"}));
  REQUIRE(t.code == 0);
  const auto metrics = nlohmann::json::parse(read_text_file(workspace() / "metrics.json"));
  CHECK(metrics["schema_version"] == 1);
  CHECK(read_text_file(workspace() / "confusion.csv").rfind("actual,", 0) == 0);
  CHECK(read_text_file(workspace() / "ranking.csv").rfind("model,", 0) == 0);
  CHECK(nlohmann::json::parse(read_text_file(workspace() / "model.json"))["schema_version"] == 1);

  const auto e = ser_cli(with_fast({"explain", "--out", ws, "--seed", "7"}));
  REQUIRE(e.code == 0);
  CHECK(read_text_file(workspace() / "shap_importance.csv").rfind("feature,class,mean_abs_shap\n", 0) == 0);
  CHECK(read_text_file(workspace() / "backmap.csv").rfind("feature,weight\n", 0) == 0);
  CHECK(line_count(read_text_file(workspace() / "backmap.csv")) == 74);
}

TEST_CASE("run, rerun, resume, report") {
  const auto a = ser::testing::temp_dir("cli_run_a");
  const auto b = ser::testing::temp_dir("cli_run_b");
  const auto base = with_fast({"run", "--synth", "10", "--seed", "7"});

  auto full = base;
  full.insert(full.end(), {"--out", a.string(), "--max-iterations", "2"});
  const auto r = ser_cli(full);
  REQUIRE(r.code == 0);
  for (const char* f : {"state.json", "history.csv", "metrics.json", "confusion.csv", "ranking.csv",
                        "ranking_initial.csv", "shap_importance.csv", "backmap.csv", "boostset.json", "boosted.csv"})
    CHECK(fs::exists(a / f));
  const auto metrics = nlohmann::json::parse(read_text_file(a / "metrics.json"));
  CHECK(metrics.contains("initial_features"));
  CHECK(metrics.contains("boosted_features"));
  const auto state_a = read_text_file(a / "state.json");

  // Same flags again: byte-identical artifacts.
  REQUIRE(ser_cli(full).code == 0);
  CHECK(read_text_file(a / "state.json") == state_a);

  auto one = base;
  one.insert(one.end(), {"--out", b.string(), "--max-iterations", "1"});
  REQUIRE(ser_cli(one).code == 0);
  CHECK(line_count(read_text_file(b / "history.csv")) == 2);
  const auto resumed = ser_cli({"run", "--resume", (b / "state.json").string(), "--max-iterations", "2"});
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("resuming after iteration 1") != std::string::npos);
  CHECK(read_text_file(b / "history.csv") == read_text_file(a / "history.csv"));
  CHECK(read_text_file(b / "metrics.json") == read_text_file(a / "metrics.json"));

  const auto metrics_before = read_text_file(a / "metrics.json");
  fs::remove(a / "metrics.json");
  REQUIRE(ser_cli({"report", "--out", a.string()}).code == 0);
  CHECK(read_text_file(a / "metrics.json") == metrics_before);
}
