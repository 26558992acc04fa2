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

#include <cmath>

using namespace repalign;

namespace {

// Two-pass long-double oracle.
void oracle_moments(std::span<const float> x, long double& mean, long double& sd) {
  long double s = 0;
  for (float v : x) s += v;
  mean = s / x.size();
  long double q = 0;
  for (float v : x) q += (v - mean) * (v - mean);
  sd = std::sqrt(q / x.size());
}

long double oracle_pearson(std::span<const float> x, std::span<const float> y) {
  long double mx, sx, my, sy;
  oracle_moments(x, mx, sx);
  oracle_moments(y, my, sy);
  if (sx == 0 || sy == 0) return 0;
  long double c = 0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - mx) * (y[i] - my);
  return c / x.size() / (sx * sy);
}

ActivationMatrix with_dead(std::uint64_t seed) {
  MatrixF v = testing::gaussian_acts(300, 5, seed).values();
  v.col(2).setConstant(0.7f);
  v.col(4).setZero();
  return {"l", "A", v};
}

}  // namespace

TEST_CASE("layer stats agree with a two-pass oracle") {
  const auto acts = with_dead(1);
  const auto st = layer_stats(acts);
  REQUIRE(st.units() == 5);
  for (std::size_t u = 0; u < 5; ++u) {
    long double m, s;
    oracle_moments(acts.column(u), m, s);
    CHECK(st.mean[u] == doctest::Approx(static_cast<double>(m)).epsilon(1e-12));
    CHECK(st.std[u] == doctest::Approx(static_cast<double>(s)).epsilon(1e-10));
  }
  CHECK(st.dead_units == std::vector<std::size_t>{2, 4});
  CHECK(st.std[2] == 0.0);
  CHECK(st.is_dead(4));
}

TEST_CASE("correlations match the Pearson oracle with dead units zeroed") {
  const auto a = with_dead(2);
  const auto b = testing::gaussian_acts(300, 3, 5, "B");
  const auto w = corr_within(a);
  const auto x = corr_between(a, b);
  CHECK(x.values.rows() == 5);
  CHECK(x.values.cols() == 3);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const double want = (i == j && !(i == 2 || i == 4)) ? 1.0 : static_cast<double>(oracle_pearson(a.column(i), a.column(j)));
      CHECK(w.values(i, j) == doctest::Approx(want).epsilon(1e-9));
      CHECK(w.values(i, j) == w.values(j, i));
    }
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(x.values(i, j) == doctest::Approx(static_cast<double>(oracle_pearson(a.column(i), b.column(j)))).epsilon(1e-9));
  }
  CHECK(w.values(0, 0) == 1.0);
  CHECK(w.values(2, 2) == 0.0);
  CHECK(x.values.row(4).isZero(0.0));
}

TEST_CASE("identical and negated units give exactly +1 and -1") {
  MatrixF v = testing::gaussian_acts(500, 2, 8).values();
  v.col(1) = -v.col(0);
  const auto c = corr_within(ActivationMatrix("l", "A", v)).values;
  CHECK(std::abs(c(0, 1) + 1.0) < 1e-12);
  CHECK(c.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("results do not depend on the worker count") {
  const auto a = testing::gaussian_acts(400, 13, 3);
  const auto b = testing::gaussian_acts(400, 11, 4, "B");
  CHECK(corr_within(a, 1).values == corr_within(a, 4).values);
  CHECK(corr_between(a, b, 1).values == corr_between(a, b, 3).values);
}

TEST_CASE("between-net correlation needs aligned samples") {
  const auto a = testing::gaussian_acts(100, 3, 1);
  const auto b = testing::gaussian_acts(120, 3, 2, "B");
  CHECK(testing::error_kind_of([&] { corr_between(a, b); }) == ErrorKind::alignment);
}

TEST_CASE("sorted mean spectrum and ratio") {
  MatrixF v(2, 3);
  v << 1, 4, 2,
       3, 8, 2;
  const auto st = layer_stats(ActivationMatrix("l", "A", v));
  MatrixF w = v;
  w.col(0).setZero();
  const auto st2 = layer_stats(ActivationMatrix("l", "B", w));
  const auto spec = sorted_mean_spectrum({"A", "B"}, {st, st2});
  CHECK(spec[0].sorted_means == std::vector<double>{6, 2, 2});
  CHECK(spec[0].max_min_ratio == 3.0);
  CHECK(std::isinf(spec[1].max_min_ratio));
  MatrixF narrow = MatrixF::Ones(2, 2);
  narrow(0, 0) = 0;
  CHECK(testing::error_kind_of([&] {
          sorted_mean_spectrum({"A", "C"}, {st, layer_stats(ActivationMatrix("l", "C", narrow))});
        }) == ErrorKind::data);
}
