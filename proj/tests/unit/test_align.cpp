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

#include "repalign/align.hpp"

#include <algorithm>
#include <numeric>

using namespace repalign;

namespace {

struct Brute {
  double best;
  std::vector<std::size_t> perm;  // lexicographically smallest optimal
};

// Exhaustive search in lexicographic order; keeps the first optimum seen.
Brute brute_force(const MatrixD& s) {
  std::vector<std::size_t> p(static_cast<std::size_t>(s.rows()));
  std::iota(p.begin(), p.end(), 0);
  Brute b{-1e300, p};
  do {
    double t = 0;
    for (std::size_t i = 0; i < p.size(); ++i) t += s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
    if (t > b.best) b = {t, p};
  } while (std::next_permutation(p.begin(), p.end()));
  return b;
}

}  // namespace

TEST_CASE("full matching equals brute force on small integer matrices") {
  Rng rng(1);
  for (int t = 0; t < 150; ++t) {
    const std::size_t n = 1 + rng.below(6);
    MatrixD s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    // small integer range produces many tied optima
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = static_cast<double>(rng.below(4)) / 4.0;
    const Brute b = brute_force(s);
    const Assignment a = match(s);
    CHECK(a.total() == b.best);
    CHECK(a.permutation == b.perm);
  }
}

TEST_CASE("full matching equals brute force on continuous matrices") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(6);
    const MatrixD s = testing::random_matrix(n, n, rng);
    const Brute b = brute_force(s);
    const Assignment a = match(s);
    CHECK(a.total() == doctest::Approx(b.best).epsilon(1e-12));
    CHECK(a.permutation == b.perm);
  }
}

TEST_CASE("semi matching is the row-wise argmax with lowest-index ties") {
  MatrixD s(3, 3);
  s << 0.5, 0.9, 0.9,
       0.2, 0.1, 0.0,
       0.3, 0.3, 0.3;
  const Assignment a = semi_match(s);
  CHECK(a.permutation == std::vector<std::size_t>{1, 0, 0});
  CHECK(a.total() == doctest::Approx(0.9 + 0.2 + 0.3));
  CHECK(a.kind == AssignmentKind::semi);
}

TEST_CASE("semi total dominates full total") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(40);
    const MatrixD s = testing::random_matrix(n, n, rng);
    CHECK(semi_match(s).total() >= match(s).total());
  }
}

TEST_CASE("full matching is a bijection and apply_permutation puts scores on the diagonal") {
  Rng rng(4);
  const MatrixD s = testing::random_matrix(30, 30, rng);
  const Assignment a = match(s);
  auto sorted = a.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  const MatrixD p = apply_permutation(s, a);
  for (std::size_t i = 0; i < 30; ++i) CHECK(p(i, i) == a.pairs[i].score);
  CHECK(testing::error_kind_of([&] { apply_permutation(s, semi_match(s)); }) == ErrorKind::argument);
}

TEST_CASE("recovers a planted permutation") {
  Rng rng(5);
  const std::size_t n = 60;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  MatrixD s = testing::random_matrix(n, n, rng, -0.3, 0.3);
  for (std::size_t i = 0; i < n; ++i) s(i, perm[i]) = 0.9;
  CHECK(match(s).permutation == perm);
}

TEST_CASE("curves, unmatched fraction and layer summary") {
  MatrixD s(3, 3);
  s << 0.9, 0.8, 0.0,
       0.95, 0.1, 0.0,
       0.0, 0.0, 0.4;
  const Assignment full = match(s);
  CHECK(full.permutation == std::vector<std::size_t>{1, 0, 2});
  CHECK(unmatched_fraction(s, 0.5) == doctest::Approx(1.0 / 3.0));
  CHECK(unmatched_fraction(full, 0.85) == doctest::Approx(2.0 / 3.0));
  CHECK(testing::error_kind_of([&] { unmatched_fraction(s, 1.5); }) == ErrorKind::argument);
  const auto curves = match_curves(s);
  REQUIRE(curves.size() == 3);
  CHECK(curves[0].unit == 1);
  CHECK(curves[0].semi == 0.95);
  CHECK(curves[0].full == 0.95);
  CHECK(curves[1].unit == 0);
  CHECK(curves[1].full == 0.8);
  const auto rows = layer_summary({{"conv1", semi_match(s), full}});
  CHECK(rows[0].frac_same == doctest::Approx(2.0 / 3.0));
  CHECK(rows[0].mean_full == doctest::Approx((0.8 + 0.95 + 0.4) / 3));
}

TEST_CASE("matching input validation") {
  CHECK(testing::error_kind_of([] { match(MatrixD::Zero(2, 3)); }) == ErrorKind::argument);
  MatrixD bad = MatrixD::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(testing::error_kind_of([&] { semi_match(bad); }) == ErrorKind::argument);
  CHECK(semi_match(MatrixD::Zero(2, 3)).permutation.size() == 2);
}
