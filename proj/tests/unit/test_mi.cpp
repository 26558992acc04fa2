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

#include "repalign/mi.hpp"

#include <cmath>
#include <map>

using namespace repalign;

namespace {

// H(X) + H(Y) - H(X,Y) from ordered maps; a different algebraic route from
// the estimator's sum of log-ratios.
double oracle_mi(const std::vector<int>& x, const std::vector<int>& y) {
  std::map<int, double> px, py;
  std::map<std::pair<int, int>, double> pxy;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1 / n;
    py[y[i]] += 1 / n;
    pxy[{x[i], y[i]}] += 1 / n;
  }
  auto h = [](const auto& m) {
    double s = 0;
    for (const auto& [k, p] : m) s -= p * std::log(p);
    return s;
  };
  return h(px) + h(py) - h(pxy);
}

std::vector<float> rectified(std::size_t n, Rng& rng, double zero_frac) {
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform() < zero_frac ? 0.0f : static_cast<float>(std::exp(rng.normal()));
  return v;
}

}  // namespace

TEST_CASE("mass bins hold equal counts of distinct positive values") {
  Rng rng(5);
  const std::size_t n = 2000;
  auto col = rectified(n, rng, 0.3);
  const BinSpec bins = make_bins(col);
  std::vector<float> pos;
  for (float v : col)
    if (v > 1e-6f) pos.push_back(v);
  std::sort(pos.begin(), pos.end());
  const auto codes = assign_bins(col, bins);
  // Edge k sits at order statistic ceil(k P / 20); a value of rank r lands
  // above every edge of smaller rank.
  std::vector<std::size_t> edge_rank;
  for (std::size_t k = 1; k < 20; ++k) edge_rank.push_back((k * pos.size() + 19) / 20);
  for (std::size_t i = 0; i < n; ++i) {
    if (col[i] <= 1e-6f) {
      CHECK(codes[i] == 0);
      continue;
    }
    const auto r = static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), col[i]) - pos.begin()) + 1;
    std::size_t want = 1;
    for (auto e : edge_rank) want += e < r ? 1 : 0;
    CHECK(codes[i] == want);
  }
  // every mass bin holds P/20 values, give or take one
  std::vector<std::size_t> counts(21, 0);
  for (auto c : codes) ++counts[c];
  for (std::size_t b = 1; b < 21; ++b) CHECK(std::abs(static_cast<long>(counts[b]) - static_cast<long>(pos.size() / 20)) <= 1);
  CHECK(bins.bin_count() == 21);
  CHECK(bins.positive_count == pos.size());
}

TEST_CASE("ties at an edge go to the lower bin and duplicate edges collapse") {
  std::vector<float> col(100, 1.0f);
  for (int i = 0; i < 10; ++i) col[i] = 0.0f;
  for (int i = 90; i < 100; ++i) col[i] = 2.0f;
  const BinSpec bins = make_bins(col);
  CHECK(bins.edges == std::vector<double>{1.0});
  CHECK(bins.bin_of(1.0) == 1);
  CHECK(bins.bin_of(2.0) == 2);
  CHECK(bins.bin_of(0.0) == 0);
  CHECK(bins.bin_of(1e-6) == 0);
  CHECK(bins.bin_count() == 3);
}

TEST_CASE("all-zero units are degenerate and carry zero information") {
  std::vector<float> zeros(200, 0.0f);
  Rng rng(1);
  auto other = rectified(200, rng, 0.5);
  const BinSpec bz = make_bins(zeros);
  CHECK(bz.degenerate);
  CHECK(bz.bin_count() == 1);
  CHECK(mutual_information(zeros, other, bz, make_bins(other)) == 0.0);
}

TEST_CASE("plug-in MI matches the entropy-identity oracle") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 500 + rng.below(500);
    const int kx = 2 + static_cast<int>(rng.below(10)), ky = 2 + static_cast<int>(rng.below(10));
    std::vector<std::uint8_t> x(n), y(n);
    std::vector<int> xi(n), yi(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(kx)));
      // correlated with x half of the time
      y[i] = rng.uniform() < 0.5 ? static_cast<std::uint8_t>(x[i] % ky)
                                 : static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(ky)));
      xi[i] = x[i];
      yi[i] = y[i];
    }
    const double mi = mutual_information(x, kx, y, ky);
    CHECK(mi == doctest::Approx(std::max(0.0, oracle_mi(xi, yi))).epsilon(1e-10));
    CHECK(mi == mutual_information(y, ky, x, kx));
    CHECK(mi <= std::min(binned_entropy(x, kx), binned_entropy(y, ky)) + 1e-12);
  }
}

TEST_CASE("MI of a unit with itself is its entropy") {
  Rng rng(2);
  auto col = rectified(4000, rng, 0.4);
  const BinSpec b = make_bins(col);
  const auto codes = assign_bins(col, b);
  CHECK(mutual_information(codes, b.bin_count(), codes, b.bin_count()) ==
        doctest::Approx(binned_entropy(codes, b.bin_count())).epsilon(1e-12));
}

TEST_CASE("MI matrices are symmetric, subsampled deterministically and worker-independent") {
  Rng rng(4);
  MatrixF va(3000, 5), vb(3000, 4);
  for (Eigen::Index i = 0; i < va.size(); ++i) va.data()[i] = std::max(0.0f, static_cast<float>(rng.normal()));
  for (Eigen::Index i = 0; i < vb.size(); ++i) vb.data()[i] = std::max(0.0f, static_cast<float>(rng.normal()));
  vb.col(0) = va.col(3);
  const ActivationMatrix a("l", "A", va), b("l", "B", vb);
  MIOptions opts;
  opts.samples = 2000;
  opts.seed = 3;
  const auto m1 = mi_between(a, b, opts);
  CHECK(m1.sample_count == 2000);
  opts.workers = 3;
  const auto m2 = mi_between(a, b, opts);
  CHECK(m1.values == m2.values);
  Eigen::Index r, c;
  m1.values.maxCoeff(&r, &c);
  CHECK(r == 3);
  CHECK(c == 0);
  const auto w = mi_within(a, opts);
  CHECK(w.values == w.values.transpose());
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(w.values(i, j) <= w.values(i, i) + 1e-12);
  const auto sub = mi_between(b, a, opts);
  CHECK(sub.values == m1.values.transpose());
}

TEST_CASE("MI preconditions") {
  std::vector<float> few(10, 1.0f);
  CHECK(testing::error_kind_of([&] { make_bins(few); }) == ErrorKind::argument);
  std::vector<std::uint8_t> x(5), y(6);
  CHECK(testing::error_kind_of([&] { mutual_information(x, 2, y, 2); }) == ErrorKind::alignment);
}
