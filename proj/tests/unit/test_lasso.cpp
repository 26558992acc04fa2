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

#include "repalign/lasso.hpp"

#include <cmath>

using namespace repalign;

namespace {

// Correlated sources and a noisy sparse linear target, raw (unnormalized).
void problem(std::uint64_t seed, std::size_t m, std::size_t ns, std::size_t nt, MatrixD& x, MatrixD& y) {
  Rng rng(seed);
  x.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(ns));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  x.col(1) += 0.5 * x.col(0);
  x.array() += 3.0;
  y = MatrixD::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nt));
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    y.col(t) = 2.0 * x.col(t % x.cols()) - x.col((t + 2) % x.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, t) += 0.5 * rng.normal();
  }
}

// Subgradient optimality from first principles on raw matrices.
double oracle_violation(const MatrixD& x, const MatrixD& y, const MatrixD& w, double decay) {
  const double m = static_cast<double>(x.rows());
  const MatrixD resid = y - x * w.transpose();
  double worst = 0;
  for (Eigen::Index t = 0; t < w.rows(); ++t)
    for (Eigen::Index s = 0; s < w.cols(); ++s) {
      const double g = -x.col(s).dot(resid.col(t)) / m;
      const double v = w(t, s) != 0 ? std::abs(g + decay * (w(t, s) > 0 ? 1 : -1))
                                    : std::max(0.0, std::abs(g) - decay);
      worst = std::max(worst, v);
    }
  return worst;
}

}  // namespace

TEST_CASE("normalize centres columns and scales them to 1/sqrt(N)") {
  MatrixD x, y;
  problem(1, 400, 6, 3, x, y);
  x.col(5).setConstant(2.0);
  const auto n = normalize(x);
  CHECK(n.dims == 6.0);
  for (Eigen::Index c = 0; c < 5; ++c) {
    CHECK(std::abs(n.values.col(c).mean()) < 1e-12);
    CHECK(std::sqrt(n.values.col(c).squaredNorm() / 400) == doctest::Approx(1 / std::sqrt(6.0)).epsilon(1e-12));
  }
  CHECK(n.values.col(5).isZero(0.0));
  CHECK(n.scale[5] == 0.0);
  CHECK(normalize(x, 2.0).dims == 2.0);
}

TEST_CASE("zero decay reproduces ordinary least squares") {
  MatrixD x, y;
  problem(2, 500, 5, 4, x, y);
  const auto xs = normalize(x), ys = normalize(y);
  LassoOptions opts;
  opts.tol = 1e-13;
  const auto model = fit_mapping(xs, ys, opts);
  // Normal equations solved directly as the oracle.
  const MatrixD ols = (xs.values.transpose() * xs.values).ldlt().solve(xs.values.transpose() * ys.values).transpose();
  CHECK((model.weights - ols).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(model.report.converged);
}

TEST_CASE("solutions satisfy optimality conditions at every decay") {
  MatrixD x, y;
  problem(3, 600, 8, 5, x, y);
  const auto xs = normalize(x), ys = normalize(y);
  LassoOptions opts;
  opts.tol = 1e-10;
  const auto sweep = decay_sweep(xs, ys, default_decays(), opts);
  REQUIRE(sweep.models.size() == 6);
  for (const auto& m : sweep.models) {
    CHECK(m.report.kkt_residual <= 1e-9);
    CHECK(oracle_violation(xs.values, ys.values, m.weights, m.decay) <= 1e-9);
    CHECK(kkt_residual(xs, ys, m.weights, m.decay) == doctest::Approx(m.report.kkt_residual));
  }
  for (std::size_t i = 1; i < sweep.table.size(); ++i) {
    CHECK(sweep.table[i].objective >= sweep.table[i - 1].objective);
    CHECK(sweep.table[i].nnz_per_target <= sweep.table[i - 1].nnz_per_target);
  }
}

TEST_CASE("decay at or above lambda_max zeroes every weight") {
  MatrixD x, y;
  problem(4, 300, 6, 3, x, y);
  const auto xs = normalize(x), ys = normalize(y);
  const double lmax = lambda_max(xs, ys);
  LassoOptions opts;
  opts.decay = lmax;
  const auto at = fit_mapping(xs, ys, opts);
  CHECK(at.weights.isZero(0.0));
  CHECK(at.loss == doctest::Approx(baseline_loss(ys)).epsilon(1e-12));
  opts.decay = 0.99 * lmax;
  CHECK_FALSE(fit_mapping(xs, ys, opts).weights.isZero(0.0));
}

TEST_CASE("coordinate descent never increases the objective") {
  MatrixD x, y;
  problem(5, 400, 10, 3, x, y);
  const auto xs = normalize(x), ys = normalize(y);
  LassoOptions opts;
  opts.decay = 1e-3;
  opts.tol = 1e-12;
  opts.record_objective = true;
  const auto m = fit_mapping(xs, ys, opts);
  for (const auto& trace : m.report.objective_trace) {
    REQUIRE_FALSE(trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-15);
  }
}

TEST_CASE("self prediction at zero decay is exact") {
  MatrixD x, y;
  problem(6, 300, 6, 1, x, y);
  const auto xs = normalize(x);
  LassoOptions opts;
  opts.tol = 1e-12;
  const auto m = fit_mapping(xs, xs, opts);
  CHECK(m.loss <= 1e-10);
  CHECK((m.weights - MatrixD::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("worker count does not change the fit") {
  MatrixD x, y;
  problem(7, 300, 7, 6, x, y);
  const auto xs = normalize(x), ys = normalize(y);
  LassoOptions opts;
  opts.decay = 1e-4;
  const auto a = fit_mapping(xs, ys, opts);
  opts.workers = 4;
  const auto b = fit_mapping(xs, ys, opts);
  CHECK(a.weights == b.weights);
}

TEST_CASE("predictor sets keep the largest weights in order") {
  MappingModel m;
  m.weights.resize(2, 4);
  m.weights << 0.1, -0.5, 0.00001, 0.3,
               0.0, 0.0, 0.0, 0.0;
  m.weight_eps = 1e-4;
  const auto sets = predictor_sets(m, 2);
  REQUIRE(sets[0].size() == 2);
  CHECK(sets[0][0].source == 1);
  CHECK(sets[0][1].source == 3);
  CHECK(sets[1].empty());
}

TEST_CASE("lasso preconditions") {
  MatrixD x, y;
  problem(8, 100, 3, 2, x, y);
  const auto xs = normalize(x);
  const auto ys = normalize(MatrixD(y.topRows(50)));
  CHECK(testing::error_kind_of([&] { fit_mapping(xs, ys, {}); }) == ErrorKind::alignment);
  LassoOptions bad;
  bad.decay = -1;
  CHECK(testing::error_kind_of([&] { fit_mapping(xs, xs, bad); }) == ErrorKind::argument);
}
