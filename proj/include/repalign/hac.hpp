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

#include <vector>

namespace repalign {

/// [I, W; W^T, I] over the units of two nets: indices 0..s-1 belong to net A,
/// s..2s-1 to net B.
struct BlockMatrix {
  std::size_t s = 0;
  MatrixD values;

  std::size_t size() const { return 2 * s; }
  int net_of(std::size_t index) const { return index < s ? 0 : 1; }
};

/// Uses |W| unless `keep_sign` is set.
BlockMatrix build_block(const MatrixD& weights, bool keep_sign = false);

struct ClusterNode {
  std::size_t id;     // leaves: 0..n-1, merges: n + step
  std::size_t left;   // child ids (smaller id first); unused for leaves
  std::size_t right;
  double weight;      // average cross-pair weight at the merge
  std::size_t step;   // merge step, 0-based
  std::size_t size;   // leaf count
  bool leaf;
};

/// Greedy average-linkage merge tree. The inter-entity weight is the mean of
/// the original off-diagonal values over all cross pairs; ties go to the pair
/// with the lexicographically smallest (smaller id, larger id).
struct ClusterTree {
  std::size_t leaves = 0;
  std::vector<ClusterNode> nodes;  // leaves first, then merges in step order

  std::size_t merges() const { return nodes.size() - leaves; }
  const ClusterNode& root() const { return nodes.back(); }
  /// Leaves in left-first depth-first order.
  std::vector<std::size_t> leaf_order() const;
};

ClusterTree agglomerate(const MatrixD& similarity);
inline ClusterTree agglomerate(const BlockMatrix& b) { return agglomerate(b.values); }

struct Segment {
  std::size_t node;
  std::size_t start;  // first position in leaf order
  std::size_t end;    // one past the last position
  std::size_t depth;  // root is 0
};

struct TreeOrdered {
  std::vector<std::size_t> order;
  MatrixD matrix;               // rows/cols permuted together
  std::vector<int> diag_net;    // net tag of each diagonal position
  std::vector<Segment> segments;  // internal nodes, in merge order
};

TreeOrdered tree_order_matrix(const BlockMatrix& b, const ClusterTree& tree);

}  // namespace repalign
