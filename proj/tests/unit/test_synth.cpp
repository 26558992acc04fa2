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

#include "repalign/stats.hpp"
#include "repalign/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

using namespace repalign;

TEST_CASE("fixtures are deterministic in the seed") {
  FixtureSpec spec;
  spec.units = 10;
  spec.samples = 500;
  spec.seed = 4;
  spec.noise_sigma = 0.1;
  const auto a = generate(spec), b = generate(spec);
  CHECK(a.net_a.values() == b.net_a.values());
  CHECK(a.net_b.values() == b.net_b.values());
  CHECK(a.truth.permutation == b.truth.permutation);
  spec.seed = 5;
  CHECK(generate(spec).net_a.values() != a.net_a.values());
}

TEST_CASE("permuted copies without noise correlate exactly") {
  FixtureSpec spec;
  spec.units = 12;
  spec.samples = 2000;
  spec.seed = 1;
  const auto fx = generate(spec);
  const auto c = corr_between(fx.net_a, fx.net_b).values;
  const auto& p = fx.truth.permutation;
  CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(c(i, p[i]) > 0.999999);
  // activations are rectified: non-negative with a mass at zero
  CHECK(fx.net_a.values().minCoeff() == 0.0f);
}

TEST_CASE("mixed fixture plants the requested number of unique units") {
  FixtureSpec spec;
  spec.scenario = Scenario::mixed;
  spec.units = 40;
  spec.samples = 3000;
  spec.frac_unique = 0.25;
  const auto fx = generate(spec);
  CHECK(fx.truth.unique_units.size() == 10);
  const auto c = corr_between(fx.net_a, fx.net_b).values;
  for (auto i : fx.truth.unique_units) CHECK(c(i, fx.truth.permutation[i]) < 0.2);
}

TEST_CASE("orthogonal mixing matrices are orthogonal") {
  Rng rng(3);
  for (std::size_t n : {1u, 2u, 4u, 7u}) {
    const MatrixD q = random_orthogonal(n, rng);
    CHECK((q.transpose() * q - MatrixD::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
  FixtureSpec spec;
  spec.scenario = Scenario::rotated_blocks;
  spec.units = 8;
  spec.samples = 200;
  const auto fx = generate(spec);
  CHECK(fx.truth.block_starts == std::vector<std::size_t>{0, 4});
  CHECK(fx.truth.mixing.size() == 2);
}

TEST_CASE("planted clusters label both nets with the requested sizes") {
  FixtureSpec spec;
  spec.scenario = Scenario::planted_clusters;
  spec.units = 12;
  spec.samples = 500;
  spec.cluster_sizes = {4, 5};
  const auto fx = generate(spec);
  REQUIRE(fx.truth.labels.size() == 24);
  CHECK(std::count(fx.truth.labels.begin(), fx.truth.labels.begin() + 12, 0) == 4);
  CHECK(std::count(fx.truth.labels.begin() + 12, fx.truth.labels.end(), 1) == 5);
  CHECK(std::count(fx.truth.labels.begin(), fx.truth.labels.end(), -1) == 6);
}

TEST_CASE("sparse linear fixture has the requested support size") {
  FixtureSpec spec;
  spec.scenario = Scenario::sparse_linear;
  spec.units = 9;
  spec.samples = 300;
  spec.nnz_per_row = 2;
  const auto fx = generate(spec);
  for (Eigen::Index t = 0; t < 9; ++t) CHECK((fx.truth.weights.row(t).array() != 0.0).count() == 2);
  const auto j = fx.truth.to_json();
  CHECK(j["supports"].size() == 9);
  CHECK(j["scenario"] == "sparse_linear");
}

TEST_CASE("spec validation") {
  FixtureSpec spec;
  spec.scenario = Scenario::rotated_blocks;
  spec.units = 10;
  spec.block_size = 4;
  CHECK(testing::error_kind_of([&] { generate(spec); }) == ErrorKind::argument);
  CHECK(testing::error_kind_of([] { scenario_from_string("bogus"); }) == ErrorKind::argument);
  CHECK(scenario_from_string("planted_clusters") == Scenario::planted_clusters);
  CHECK(std::string(to_string(Scenario::mixed)) == "mixed");
}
