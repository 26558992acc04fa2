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

#include "repalign/spectral.hpp"

#include <functional>
#include <set>

using namespace repalign;

namespace {

std::size_t components(const MatrixD& adj) {
  const auto n = static_cast<std::size_t>(adj.rows());
  std::vector<int> seen(n, 0);
  std::size_t count = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (std::size_t u = 0; u < n; ++u)
        if (!seen[u] && adj(v, u) > 0) {
          seen[u] = 1;
          stack.push_back(u);
        }
    }
  }
  return count;
}

// Pair-counting form of the adjusted Rand index.
double oracle_ari(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      (sa && sb ? n11 : sa ? n10 : sb ? n01 : n00) += 1;
    }
  const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  return den == 0 ? 1.0 : 2 * (n00 * n11 - n01 * n10) / den;
}

MatrixD random_symmetric(std::size_t n, double p, Rng& rng) {
  MatrixD m = MatrixD::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) m(i, j) = m(j, i) = 0.2 + 0.8 * rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("threshold keeps entries at or above tau and zeroes the diagonal") {
  MatrixD v(3, 3);
  v << 1.0, 0.2, 0.1,
       0.19, 1.0, -0.9,
       0.3, -0.9, 1.0;
  const auto adj = threshold_adjacency(v, 0.2);
  CHECK(adj(0, 1) == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(adj(1, 0) == adj(0, 1));
  CHECK(adj(0, 2) == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(adj(1, 2) == 0.0);
  CHECK(adj.diagonal().isZero(0.0));
}

TEST_CASE("Laplacian rows sum to exactly zero") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 5 + rng.below(60);
    MatrixD v = testing::random_matrix(n, n, rng);
    const auto lap = laplacian(threshold_adjacency(v, 0.1));
    for (Eigen::Index i = 0; i < lap.rows(); ++i) {
      CHECK(lap.row(i).sum() == 0.0);
      CHECK(lap.col(i).sum() == 0.0);
    }
    CHECK(lap == lap.transpose());
  }
}

TEST_CASE("zero-eigenvalue multiplicity equals the number of components") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 4 + rng.below(30);
    const MatrixD adj = threshold_adjacency(random_symmetric(n, 0.08, rng), 0.2);
    SpectralOptions opts;
    opts.k = 2;
    const auto r = spectral_cluster(adj, opts);
    std::size_t zeros = 0;
    for (double e : r.eigenvalues)
      if (std::abs(e) < 1e-9) ++zeros;
    CHECK(zeros == components(adj));
  }
}

TEST_CASE("ARI agrees with the pair-counting oracle") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<std::size_t> a(n), b(n);
    for (auto& x : a) x = rng.below(4);
    for (std::size_t i = 0; i < n; ++i) b[i] = rng.uniform() < 0.7 ? a[i] : rng.below(4);
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle_ari(a, b)).epsilon(1e-12));
  }
  std::vector<std::size_t> x{0, 0, 1, 1}, y{5, 5, 2, 2};
  CHECK(adjusted_rand_index(x, y) == 1.0);
}

TEST_CASE("disconnected cliques are recovered exactly") {
  const std::size_t n = 30;
  MatrixD adj = MatrixD::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && i / 10 == j / 10) adj(i, j) = 0.5;
  SpectralOptions opts;
  opts.k = 3;
  const auto r = spectral_cluster(adj, opts);
  for (std::size_t i = 0; i < n; ++i) CHECK(r.labels[i] == i / 10);
  CHECK(r.suggested_k == 3);
  const auto members = r.members();
  CHECK(members.size() == 3);
  CHECK(members[1].front() == 10);
}

TEST_CASE("k-means is seed-deterministic and separates blobs") {
  Rng rng(4);
  MatrixD pts(60, 2);
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double cx = (i / 20) * 10.0;
    pts(i, 0) = cx + rng.normal() * 0.1;
    pts(i, 1) = rng.normal() * 0.1;
  }
  const auto a = kmeans(pts, 3, 7);
  const auto b = kmeans(pts, 3, 7);
  CHECK(a.labels == b.labels);
  for (std::size_t i = 0; i < 60; ++i) CHECK(a.labels[i] == i / 20);
  CHECK(a.inertia < 60 * 0.1);
}

TEST_CASE("hierarchical refinement respects the size bound") {
  Rng rng(5);
  const std::size_t s = 20;
  const MatrixD adj = threshold_adjacency(random_symmetric(2 * s, 0.3, rng), 0.2);
  SpectralOptions opts;
  opts.k = 2;
  const auto r = spectral_cluster(adj, opts);
  const auto h = refine_hierarchical(r, adj, s, 0.1, 1);
  CHECK(h.bound == doctest::Approx(4.0));
  std::set<std::size_t> seen;
  for (auto leaf : h.leaves) {
    const auto& node = h.nodes[leaf];
    CHECK((node.members.size() <= 4 || node.guarded));
    for (auto v : node.members) CHECK(seen.insert(v).second);
  }
  CHECK(seen.size() == 2 * s);
  for (std::size_t v = 0; v < 2 * s; ++v) {
    const auto& node = h.nodes[h.leaves[h.leaf_labels[v]]];
    CHECK(std::find(node.members.begin(), node.members.end(), v) != node.members.end());
  }
}

TEST_CASE("cluster metrics average the between and within blocks") {
  MatrixD between(2, 2), wa(2, 2), wb(2, 2);
  between << 0.8, 0.2,
             0.4, 0.6;
  wa << 1, 0.5,
        0.5, 1;
  wb << 1, 0.1,
        0.1, 1;
  const auto m = cluster_metrics({0, 1, 2}, between, wa, wb);
  CHECK(m.members_a == 2);
  CHECK(m.members_b == 1);
  CHECK(m.between_sim == doctest::Approx((0.8 + 0.4) / 2));
  CHECK(m.within_sim == doctest::Approx(((1 + 0.5 + 0.5 + 1) / 4 + 1.0) / 2));
  const auto n = cluster_metrics({0, 1, 2}, between, wa, wb, true);
  CHECK(n.between_sim == doctest::Approx((0.8 + 0.4) / 4));
}

TEST_CASE("spectral preconditions") {
  SpectralOptions opts;
  opts.k = 1;
  CHECK(testing::error_kind_of([&] { spectral_cluster(MatrixD::Zero(3, 3), opts); }) == ErrorKind::argument);
  opts.k = 4;
  CHECK(testing::error_kind_of([&] { spectral_cluster(MatrixD::Zero(3, 3), opts); }) == ErrorKind::argument);
}
