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

#include "repalign/align.hpp"
#include "repalign/hac.hpp"
#include "repalign/lasso.hpp"
#include "repalign/mi.hpp"
#include "repalign/report.hpp"
#include "repalign/spectral.hpp"
#include "repalign/stats.hpp"
#include "repalign/synth.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>

namespace repalign {

namespace {

struct Check {
  const char* name;
  std::function<bool()> run;
};

bool permuted_recovery(std::uint64_t seed) {
  FixtureSpec spec;
  spec.units = 24;
  spec.samples = 4000;
  spec.seed = seed;
  const Fixture fx = generate(spec);
  const Assignment full = match(corr_between(fx.net_a, fx.net_b).values);
  return full.permutation == fx.truth.permutation;
}

bool corr_diagonal(std::uint64_t seed) {
  FixtureSpec spec;
  spec.units = 16;
  spec.samples = 2000;
  spec.seed = seed;
  const MatrixD c = corr_within(generate(spec).net_a).values;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    if (c(i, i) != 1.0) return false;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      if (c(i, j) != c(j, i) || std::abs(c(i, j)) > 1.0) return false;
  }
  return true;
}

bool actv_round_trip(std::uint64_t seed) {
  FixtureSpec spec;
  spec.units = 8;
  spec.samples = 100;
  spec.seed = seed;
  const Fixture fx = generate(spec);
  const auto path = std::filesystem::temp_directory_path() /
                    ("repalign_selftest_" + std::to_string(seed) + ".actv");
  write_actv(path, fx.net_a);
  const ActivationMatrix back = load_activations(path);
  std::filesystem::remove(path);
  return back.values() == fx.net_a.values() && back.net() == fx.net_a.net() &&
         back.layer() == fx.net_a.layer();
}

bool mi_symmetric(std::uint64_t seed) {
  FixtureSpec spec;
  spec.units = 6;
  spec.samples = 3000;
  spec.seed = seed;
  const Fixture fx = generate(spec);
  MIOptions opts;
  opts.seed = seed;
  const MatrixD m = mi_within(fx.net_a, opts).values;
  return m.isApprox(m.transpose(), 0.0) && (m.array() >= 0.0).all();
}

bool lasso_optimal(std::uint64_t seed) {
  FixtureSpec spec;
  spec.units = 12;
  spec.samples = 2000;
  spec.seed = seed;
  spec.scenario = Scenario::sparse_linear;
  spec.noise_sigma = 0.1;
  const Fixture fx = generate(spec);
  const auto x = normalize(fx.net_a);
  const auto y = normalize(fx.net_b);
  LassoOptions opts;
  opts.decay = 1e-3;
  opts.tol = 1e-9;
  const MappingModel m = fit_mapping(x, y, opts);
  return kkt_residual(x, y, m.weights, opts.decay) <= 1e-8;
}

bool hac_complete(std::uint64_t seed) {
  Rng rng(seed);
  MatrixD w(10, 10);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform();
  const BlockMatrix b = build_block(w);
  const ClusterTree t = agglomerate(b);
  auto order = t.leaf_order();
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) return false;
  return t.merges() == b.size() - 1 && t.root().size == b.size();
}

bool planted_clusters(std::uint64_t seed) {
  FixtureSpec spec;
  spec.units = 24;
  spec.samples = 4000;
  spec.seed = seed;
  spec.scenario = Scenario::planted_clusters;
  spec.cluster_sizes = {8, 8, 8};
  const Fixture fx = generate(spec);
  const auto sim = combined_matrix(corr_within(fx.net_a).values, corr_within(fx.net_b).values,
                                   corr_between(fx.net_a, fx.net_b).values, 0.2);
  SpectralOptions opts;
  opts.k = 3;
  opts.seed = seed;
  const SpectralResult r = spectral_cluster(sim, opts);
  std::vector<std::size_t> truth(fx.truth.labels.begin(), fx.truth.labels.end());
  return adjusted_rand_index(r.labels, truth) > 0.99;
}

}  // namespace

int run_selftest(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = cfg.seed;
  const std::vector<Check> checks = {
      {"permuted fixture is recovered by full matching", [&] { return permuted_recovery(seed); }},
      {"within-net correlation is symmetric with unit diagonal", [&] { return corr_diagonal(seed); }},
      {"ACTV write/read is lossless", [&] { return actv_round_trip(seed); }},
      {"MI matrix is symmetric and non-negative", [&] { return mi_symmetric(seed); }},
      {"LASSO solution satisfies optimality conditions", [&] { return lasso_optimal(seed); }},
      {"HAC tree covers every unit once", [&] { return hac_complete(seed); }},
      {"spectral clustering recovers planted clusters", [&] { return planted_clusters(seed); }},
  };
  int failed = 0;
  for (const auto& c : checks) {
    bool ok = false;
    std::string why;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      why = std::string(" (") + e.what() + ")";
    }
    log << (ok ? "PASS " : "FAIL ") << c.name << why << "\n";
    failed += ok ? 0 : 1;
  }
  log << (failed == 0 ? "selftest: all checks passed" : "selftest: " + std::to_string(failed) + " failed")
      << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace repalign
