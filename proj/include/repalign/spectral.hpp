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

#pragma once

#include "repalign/common.hpp"

#include <cstdint>
#include <vector>

namespace repalign {

/// 2S x 2S matrix [corr(X,X), corr(X,Y); corr(X,Y)^T, corr(Y,Y)] and its
/// thresholded adjacency (entries below tau and the diagonal zeroed).
struct CombinedSimilarity {
  std::size_t units = 0;  // S, per net
  double tau = 0.2;
  MatrixD values;
  MatrixD adjacency;

  std::size_t size() const { return 2 * units; }
  int net_of(std::size_t v) const { return v < units ? 0 : 1; }
};

CombinedSimilarity combined_matrix(const MatrixD& within_a, const MatrixD& within_b,
                                   const MatrixD& between, double tau);
/// Thresholds an arbitrary symmetric similarity (max of (i,j) and (j,i)).
MatrixD threshold_adjacency(const MatrixD& values, double tau);

/// Unnormalized Laplacian D - W.
MatrixD laplacian(const MatrixD& adjacency);

struct SpectralOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
};

struct SpectralResult {
  std::size_t k = 0;
  std::vector<std::size_t> labels;    // cluster id per vertex, numbered by first appearance
  std::vector<double> eigenvalues;    // all, ascending
  double inertia = 0.0;
  std::size_t suggested_k = 0;        // largest-gap diagnostic, never applied

  std::vector<std::vector<std::size_t>> members() const;
};

SpectralResult spectral_cluster(const MatrixD& adjacency, const SpectralOptions& opts);
inline SpectralResult spectral_cluster(const CombinedSimilarity& sim, const SpectralOptions& opts) {
  return spectral_cluster(sim.adjacency, opts);
}

/// k-means on rows of `points` with seeded farthest-point initialization.
struct KMeansResult {
  std::vector<std::size_t> labels;
  double inertia = 0.0;
};
KMeansResult kmeans(const MatrixD& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 10, std::size_t max_iter = 300);

/// Node of the refined cluster hierarchy.
struct ClusterNodeH {
  std::vector<std::size_t> members;  // ascending vertex ids
  std::size_t level = 0;             // 0 = initial spectral cluster
  std::vector<std::size_t> children; // indices into HierarchicalClustering::nodes
  bool guarded = false;              // oversized but could not be split
};

struct HierarchicalClustering {
  std::vector<ClusterNodeH> nodes;
  std::vector<std::size_t> roots;
  std::vector<std::size_t> leaf_labels;  // leaf cluster id per vertex
  std::vector<std::size_t> leaf_level;   // level of that leaf per vertex
  std::vector<std::size_t> leaves;       // node indices of leaves, in label order
  double bound = 0.0;
};

/// Recursively bisects (spectral, k = 2 on the induced subgraph) every cluster
/// larger than 2 * alpha * units_per_net.
HierarchicalClustering refine_hierarchical(const SpectralResult& result, const MatrixD& adjacency,
                                           std::size_t units_per_net, double alpha = 0.025,
                                           std::uint64_t seed = 0);

struct ClusterMetrics {
  double between_sim = 0.0;
  double within_sim = 0.0;
  std::size_t members_a = 0;
  std::size_t members_b = 0;
};

/// Vertex v < S is unit v of net A, otherwise unit v - S of net B. With
/// `layer_normalized`, sums are divided by S^2 instead of the cluster sizes.
ClusterMetrics cluster_metrics(const std::vector<std::size_t>& members, const MatrixD& between,
                               const MatrixD& within_a, const MatrixD& within_b,
                               bool layer_normalized = false);

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace repalign
