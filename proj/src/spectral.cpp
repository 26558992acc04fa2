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

#include "repalign/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace repalign {

namespace {

// Weights live on a 2^-30 grid so that degree sums are exact in any order.
double quantize(double w) { return std::ldexp(std::round(std::ldexp(w, 30)), -30); }

std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& raw) {
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto it = remap.find(raw[i]);
    if (it == remap.end()) it = remap.emplace(raw[i], remap.size()).first;
    out[i] = it->second;
  }
  return out;
}

double sq_dist(const MatrixD& pts, Eigen::Index i, const MatrixD& centers, Eigen::Index c) {
  return (pts.row(i) - centers.row(c)).squaredNorm();
}

}  // namespace

MatrixD threshold_adjacency(const MatrixD& values, double tau) {
  require(values.rows() == values.cols(), ErrorKind::argument, "similarity must be square");
  const Eigen::Index n = values.rows();
  MatrixD adj = MatrixD::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::max(values(i, j), values(j, i));
      if (v >= tau && v > 0.0) {
        const double q = quantize(v);
        adj(i, j) = q;
        adj(j, i) = q;
      }
    }
  return adj;
}

CombinedSimilarity combined_matrix(const MatrixD& within_a, const MatrixD& within_b,
                                   const MatrixD& between, double tau) {
  const Eigen::Index s = within_a.rows();
  require(s > 0 && within_a.cols() == s && within_b.rows() == s && within_b.cols() == s &&
              between.rows() == s && between.cols() == s,
          ErrorKind::argument, "combined matrix needs three S x S blocks");
  require(tau >= 0.0, ErrorKind::argument, "tau must be non-negative");
  CombinedSimilarity out;
  out.units = static_cast<std::size_t>(s);
  out.tau = tau;
  out.values.resize(2 * s, 2 * s);
  out.values.topLeftCorner(s, s) = within_a;
  out.values.topRightCorner(s, s) = between;
  out.values.bottomLeftCorner(s, s) = between.transpose();
  out.values.bottomRightCorner(s, s) = within_b;
  out.adjacency = threshold_adjacency(out.values, tau);
  return out;
}

MatrixD laplacian(const MatrixD& adjacency) {
  require(adjacency.rows() == adjacency.cols(), ErrorKind::argument, "adjacency must be square");
  MatrixD lap = -adjacency;
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    double degree = 0.0;
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j)
      if (j != i) degree += adjacency(i, j);
    lap(i, i) = degree;
  }
  return lap;
}

std::vector<std::vector<std::size_t>> SpectralResult::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t v = 0; v < labels.size(); ++v) out[labels[v]].push_back(v);
  return out;
}

KMeansResult kmeans(const MatrixD& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts, std::size_t max_iter) {
  const auto n = static_cast<std::size_t>(points.rows());
  require(k >= 1 && k <= n, ErrorKind::argument,
          "k-means needs 1 <= k <= points, got k=" + std::to_string(k));
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const auto kk = static_cast<Eigen::Index>(k);
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    Rng rng(Rng::derive(seed, r));
    MatrixD centers(kk, points.cols());
    std::vector<char> chosen(n, 0);
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    centers.row(0) = points.row(static_cast<Eigen::Index>(first));
    chosen[first] = 1;
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = sq_dist(points, static_cast<Eigen::Index>(i), centers, 0);
    for (Eigen::Index c = 1; c < kk; ++c) {
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (pick == n || nearest[i] > nearest[pick]) pick = i;
      }
      chosen[pick] = 1;
      centers.row(c) = points.row(static_cast<Eigen::Index>(pick));
      for (std::size_t i = 0; i < n; ++i)
        nearest[i] = std::min(nearest[i], sq_dist(points, static_cast<Eigen::Index>(i), centers, c));
    }

    std::vector<std::size_t> labels(n, k);
    double inertia = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
      bool changed = false;
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        double bestd = sq_dist(points, static_cast<Eigen::Index>(i), centers, 0);
        for (Eigen::Index c = 1; c < kk; ++c) {
          const double d = sq_dist(points, static_cast<Eigen::Index>(i), centers, c);
          if (d < bestd) {
            bestd = d;
            arg = static_cast<std::size_t>(c);
          }
        }
        inertia += bestd;
        if (labels[i] != arg) {
          labels[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      MatrixD sums = MatrixD::Zero(kk, points.cols());
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums.row(static_cast<Eigen::Index>(labels[i])) += points.row(static_cast<Eigen::Index>(i));
        ++counts[labels[i]];
      }
      for (std::size_t c = 0; c < k; ++c)
        if (counts[c] > 0)  // empty clusters keep their previous center
          centers.row(static_cast<Eigen::Index>(c)) =
              sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
    }
  }
  best.labels = canonical_labels(best.labels);
  return best;
}

SpectralResult spectral_cluster(const MatrixD& adjacency, const SpectralOptions& opts) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  require(adjacency.rows() == adjacency.cols(), ErrorKind::argument, "adjacency must be square");
  require(opts.k >= 2, ErrorKind::argument, "spectral clustering needs k >= 2");
  require(opts.k <= n, ErrorKind::argument,
          "k=" + std::to_string(opts.k) + " exceeds the " + std::to_string(n) + " vertices");
  const MatrixD lap = laplacian(adjacency);
  Eigen::SelfAdjointEigenSolver<MatrixD> solver(lap);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numeric, "Laplacian eigendecomposition failed");

  SpectralResult out;
  out.k = opts.k;
  const VectorD& evals = solver.eigenvalues();
  out.eigenvalues.assign(evals.data(), evals.data() + evals.size());
  double gap = -1.0;
  for (std::size_t i = 1; i < out.eigenvalues.size(); ++i) {
    const double g = out.eigenvalues[i] - out.eigenvalues[i - 1];
    if (g > gap) {
      gap = g;
      out.suggested_k = i;
    }
  }
  const MatrixD embedding = solver.eigenvectors().leftCols(static_cast<Eigen::Index>(opts.k));
  const KMeansResult km = kmeans(embedding, opts.k, opts.seed, opts.restarts, opts.max_iter);
  out.labels = km.labels;
  out.inertia = km.inertia;
  // k-means can leave clusters empty; report the number actually used.
  out.k = 1 + *std::max_element(out.labels.begin(), out.labels.end());
  return out;
}

HierarchicalClustering refine_hierarchical(const SpectralResult& result, const MatrixD& adjacency,
                                           std::size_t units_per_net, double alpha,
                                           std::uint64_t seed) {
  require(alpha > 0.0, ErrorKind::argument, "alpha must be positive");
  require(static_cast<std::size_t>(adjacency.rows()) == result.labels.size(), ErrorKind::argument,
          "adjacency does not match the clustering");
  HierarchicalClustering h;
  h.bound = 2.0 * alpha * static_cast<double>(units_per_net);
  for (auto& m : result.members()) {
    h.roots.push_back(h.nodes.size());
    h.nodes.push_back({std::move(m), 0, {}, false});
  }
  // Breadth-first; nodes are appended so indices stay stable.
  for (std::size_t idx = 0; idx < h.nodes.size(); ++idx) {
    if (static_cast<double>(h.nodes[idx].members.size()) <= h.bound) continue;
    const std::vector<std::size_t> members = h.nodes[idx].members;
    if (members.size() < 2) {
      h.nodes[idx].guarded = true;
      continue;
    }
    const auto m = static_cast<Eigen::Index>(members.size());
    MatrixD sub(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        sub(i, j) = adjacency(static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]),
                              static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]));
    SpectralOptions opts;
    opts.k = 2;
    opts.seed = Rng::derive(seed, idx);
    const SpectralResult split = spectral_cluster(sub, opts);
    if (split.k < 2) {
      h.nodes[idx].guarded = true;
      continue;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i = 0; i < members.size(); ++i)
      (split.labels[i] == 0 ? left : right).push_back(members[i]);
    const std::size_t level = h.nodes[idx].level + 1;
    h.nodes[idx].children = {h.nodes.size(), h.nodes.size() + 1};
    h.nodes.push_back({std::move(left), level, {}, false});
    h.nodes.push_back({std::move(right), level, {}, false});
  }
  h.leaf_labels.assign(result.labels.size(), 0);
  h.leaf_level.assign(result.labels.size(), 0);
  std::vector<std::size_t> stack(h.roots.rbegin(), h.roots.rend());
  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    const auto& node = h.nodes[idx];
    if (node.children.empty()) {
      for (std::size_t v : node.members) {
        h.leaf_labels[v] = h.leaves.size();
        h.leaf_level[v] = node.level;
      }
      h.leaves.push_back(idx);
      continue;
    }
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
  }
  return h;
}

ClusterMetrics cluster_metrics(const std::vector<std::size_t>& members, const MatrixD& between,
                               const MatrixD& within_a, const MatrixD& within_b,
                               bool layer_normalized) {
  const auto s = static_cast<std::size_t>(between.rows());
  require(between.cols() == between.rows() && within_a.rows() == between.rows() &&
              within_b.rows() == between.rows(),
          ErrorKind::argument, "cluster metrics need S x S matrices");
  std::vector<Eigen::Index> a, b;
  for (std::size_t v : members) {
    require(v < 2 * s, ErrorKind::argument, "cluster member out of range");
    if (v < s)
      a.push_back(static_cast<Eigen::Index>(v));
    else
      b.push_back(static_cast<Eigen::Index>(v - s));
  }
  require(!a.empty() || !b.empty(), ErrorKind::argument, "empty cluster");
  ClusterMetrics m;
  m.members_a = a.size();
  m.members_b = b.size();
  const double layer_norm = static_cast<double>(s) * static_cast<double>(s);
  auto block_mean = [&](const MatrixD& mat, const std::vector<Eigen::Index>& rows,
                        const std::vector<Eigen::Index>& cols) {
    double sum = 0.0;
    for (auto i : rows)
      for (auto j : cols) sum += mat(i, j);
    const double denom = layer_normalized
                             ? layer_norm
                             : static_cast<double>(rows.size()) * static_cast<double>(cols.size());
    return sum / denom;
  };
  if (!a.empty() && !b.empty()) m.between_sim = block_mean(between, a, b);
  double within = 0.0;
  int parts = 0;
  if (!a.empty()) {
    within += block_mean(within_a, a, a);
    ++parts;
  }
  if (!b.empty()) {
    within += block_mean(within_b, b, b);
    ++parts;
  }
  m.within_sim = within / parts;
  return m;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  require(a.size() == b.size() && !a.empty(), ErrorKind::argument, "ARI needs equal-length labelings");
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (auto& [_, c] : joint) sum_joint += c2(c);
  for (auto& [_, c] : ra) sum_a += c2(c);
  for (auto& [_, c] : rb) sum_b += c2(c);
  const double total = c2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both labelings trivial and identical in structure
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace repalign
