/*
 * Copyright 2026 The repalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "support.hpp"

#include "repalign/report.hpp"

#include <fstream>
#include <sstream>

using namespace repalign;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

RunConfig fixture_config(const TempDir& dir, Scenario sc) {
  RunConfig cfg;
  cfg.fixture.scenario = sc;
  cfg.fixture.units = 12;
  cfg.fixture.samples = 600;
  cfg.fixture.seed = 2;
  cfg.fixture.cluster_sizes = {4, 4};
  cfg.out_dir = (dir / "fx").string();
  std::ostringstream log;
  REQUIRE(run_command("gen-fixture", cfg, log) == 0);
  RunConfig run;
  run.catalog = (dir / "fx" / "catalog.json").string();
  run.k = 2;
  run.decays = {0.0, 1e-3};
  run.decay = 1e-3;
  return run;
}

}  // namespace

TEST_CASE("top activating samples match a full sort") {
  const auto acts = testing::gaussian_acts(200, 3, 4);
  const auto top = top_activating_samples(acts, 1, 9);
  REQUIRE(top.size() == 9);
  std::vector<std::pair<float, std::size_t>> all;
  for (std::size_t i = 0; i < 200; ++i) all.push_back({-acts.column(1)[i], i});
  std::sort(all.begin(), all.end());
  for (std::size_t r = 0; r < 9; ++r) {
    CHECK(top[r].sample == all[r].second);
    CHECK(top[r].value == -all[r].first);
  }
  CHECK(testing::error_kind_of([&] { top_activating_samples(acts, 3, 1); }) == ErrorKind::argument);
  CHECK(testing::error_kind_of([&] { top_activating_samples(acts, 0, 201); }) == ErrorKind::argument);
}

TEST_CASE("ties among top samples go to the lower index") {
  MatrixF v = MatrixF::Zero(5, 1);
  v(3, 0) = 1;
  v(1, 0) = 1;
  const auto top = top_activating_samples(ActivationMatrix("l", "A", v), 0, 3);
  CHECK(top[0].sample == 1);
  CHECK(top[1].sample == 3);
  CHECK(top[2].sample == 0);
}

TEST_CASE("doubles print in shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
}

TEST_CASE("FNV-1a digest reference values") {
  CHECK(digest_hex("") == "cbf29ce484222325");
  CHECK(digest_hex("a") == "af63dc4c8601ec8c");
  CHECK(digest_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("matrix CSV has net:unit headers and reads back exactly") {
  TempDir dir("matrix");
  Rng rng(1);
  const MatrixD m = testing::random_matrix(3, 4, rng);
  const std::string csv = matrix_csv(m, "A", "B");
  CHECK(csv.substr(0, csv.find('\n')) == ",B:0,B:1,B:2,B:3");
  CHECK(csv.find("\nA:2,") != std::string::npos);
  std::ofstream(dir / "m.csv") << csv;
  CHECK(read_matrix(dir / "m.csv") == m);

  write_matrix_actv(dir / "m.actv", m, "corr:A:B", "between");
  const auto raw = read_actv_raw(dir / "m.actv");
  CHECK(raw.layer == "corr:A:B");
  CHECK(raw.rows == 3);
  CHECK(raw.cols == 4);
  CHECK(read_matrix(dir / "m.actv") == MatrixD(m.cast<float>().cast<double>()));
}

TEST_CASE("config JSON round trip and validation") {
  RunConfig c;
  c.tau = 0.3;
  c.nets = {"A", "B"};
  c.k_per_layer = {{"conv1", 5}};
  c.fixture.scenario = Scenario::mixed;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(c.to_json().contains("workers") == false);
  CHECK(c.to_json().contains("out_dir") == false);
  CHECK(testing::error_kind_of([] { RunConfig::from_json({{"format", "xml"}}); }) == ErrorKind::argument);
  CHECK(testing::error_kind_of([] { RunConfig::from_json({{"tau", "high"}}); }) == ErrorKind::argument);
  CHECK(testing::error_kind_of([] { RunConfig::from_json({{"fixture", {{"scenario", "x"}}}}); }) ==
        ErrorKind::argument);
}

TEST_CASE("commands write their outputs") {
  TempDir dir("commands");
  RunConfig cfg = fixture_config(dir, Scenario::planted_clusters);
  std::ostringstream log;
  for (const std::string cmd : {"stats", "corr", "mi", "match", "lasso", "hac", "spectral", "means", "topk"}) {
    cfg.out_dir = (dir / cmd).string();
    CHECK_MESSAGE(run_command(cmd, cfg, log) == 0, cmd);
  }
  CHECK(fs::exists(dir / "stats" / "stats_A.csv"));
  CHECK(fs::exists(dir / "corr" / "corr_between.actv"));
  CHECK(fs::exists(dir / "mi" / "mi_within_B.csv"));
  CHECK(fs::exists(dir / "match" / "assignment_full.csv"));
  CHECK(fs::exists(dir / "lasso" / "predictors.json"));
  CHECK(fs::exists(dir / "hac" / "tree.json"));
  CHECK(fs::exists(dir / "spectral" / "clusters.csv"));
  CHECK(fs::exists(dir / "means" / "means.csv"));
  CHECK(fs::exists(dir / "topk" / "topk_B.csv"));

  // cached intermediates
  cfg.out_dir = (dir / "rematch").string();
  cfg.matrix = (dir / "corr" / "corr_between.actv").string();
  CHECK(run_command("match", cfg, log) == 0);
  // the cached binary holds float32 scores, so compare the pairs only
  auto pairs = [](const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
    return out;
  };
  CHECK(pairs(slurp(dir / "rematch" / "assignment_full.csv")) == pairs(slurp(dir / "match" / "assignment_full.csv")));

  cfg.out_dir = (dir / "json").string();
  cfg.format = "json";
  cfg.matrix.clear();
  CHECK(run_command("stats", cfg, log) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "json" / "stats_A.json"));
  CHECK(j.size() == 12);
  CHECK(j[0].contains("std"));
}

TEST_CASE("command errors carry the right kind") {
  TempDir dir("errors");
  RunConfig cfg = fixture_config(dir, Scenario::permuted);
  std::ostringstream log;
  cfg.out_dir = (dir / "o").string();
  CHECK(testing::error_kind_of([&] { run_command("frobnicate", cfg, log); }) == ErrorKind::argument);
  RunConfig nok = cfg;
  nok.k = 0;
  CHECK(testing::error_kind_of([&] { run_command("spectral", nok, log); }) == ErrorKind::argument);
  RunConfig missing = cfg;
  missing.catalog = (dir / "nope.json").string();
  CHECK(testing::error_kind_of([&] { run_command("stats", missing, log); }) == ErrorKind::io);
  RunConfig one = cfg;
  one.nets = {"A"};
  CHECK(testing::error_kind_of([&] { run_command("corr", one, log); }) == ErrorKind::argument);
}

TEST_CASE("pipeline writes a manifest that lists every output") {
  TempDir dir("pipeline");
  RunConfig cfg = fixture_config(dir, Scenario::planted_clusters);
  cfg.out_dir = (dir / "run").string();
  std::ostringstream log;
  REQUIRE(run_command("pipeline", cfg, log) == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "run" / "manifest.json"));
  std::size_t listed = 0;
  for (const auto& f : manifest["outputs"]) {
    ++listed;
    CHECK(digest_hex(slurp(dir / "run" / f["path"].get<std::string>())) == f["digest"]);
  }
  std::size_t on_disk = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "run"))
    if (e.is_regular_file()) ++on_disk;
  CHECK(on_disk == listed + 1);
  CHECK(manifest["config"]["k"] == 2);
  CHECK(fs::exists(dir / "run" / "summary_A__B.csv"));
}
