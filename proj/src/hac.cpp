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

#include "repalign/hac.hpp"

#include <algorithm>
#include <limits>

namespace repalign {

BlockMatrix build_block(const MatrixD& weights, bool keep_sign) {
  require(weights.rows() == weights.cols() && weights.rows() > 0, ErrorKind::argument,
          "block matrix needs a square, non-empty weight matrix");
  const Eigen::Index s = weights.rows();
  BlockMatrix b;
  b.s = static_cast<std::size_t>(s);
  b.values = MatrixD::Identity(2 * s, 2 * s);
  const MatrixD w = keep_sign ? weights : MatrixD(weights.cwiseAbs());
  b.values.topRightCorner(s, s) = w;
  b.values.bottomLeftCorner(s, s) = w.transpose();
  return b;
}

ClusterTree agglomerate(const MatrixD& sim) {
  require(sim.rows() == sim.cols() && sim.rows() >= 1, ErrorKind::argument,
          "agglomerate needs a square matrix");
  require(sim.allFinite(), ErrorKind::argument, "agglomerate needs finite values");
  const std::size_t n = static_cast<std::size_t>(sim.rows());
  ClusterTree tree;
  tree.leaves = n;
  for (std::size_t i = 0; i < n; ++i)
    tree.nodes.push_back({i, i, i, 0.0, 0, 1, true});

  // Slot k holds one active entity; sums(k, l) is the total of original
  // off-diagonal values between the two entities' members.
  MatrixD sums = sim;
  // Entry (i, j) and (j, i) can differ by rounding in exported matrices; use
  // the upper triangle so the two directions always agree.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      sums(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sums(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  std::vector<std::size_t> slot_id(n), slot_size(n, 1);
  std::vector<char> active(n, 1);
  for (std::size_t i = 0; i < n; ++i) slot_id[i] = i;

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    std::pair<std::size_t, std::size_t> best_key{n * 2, n * 2};
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double avg = sums(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) /
                           static_cast<double>(slot_size[a] * slot_size[b]);
        const std::pair<std::size_t, std::size_t> key{std::min(slot_id[a], slot_id[b]), std::max(slot_id[a], slot_id[b])};
        if (avg > best || (avg == best && key < best_key)) {
          best = avg;
          ba = a;
          bb = b;
          best_key = key;
        }
      }
    }
    const std::size_t id = n + step;
    tree.nodes.push_back({id, best_key.first, best_key.second, best, step,
                          slot_size[ba] + slot_size[bb], false});
    // Merge bb into ba.
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == ba || k == bb) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      const double merged = sums(static_cast<Eigen::Index>(ba), kk) + sums(static_cast<Eigen::Index>(bb), kk);
      sums(static_cast<Eigen::Index>(ba), kk) = merged;
      sums(kk, static_cast<Eigen::Index>(ba)) = merged;
    }
    slot_size[ba] += slot_size[bb];
    slot_id[ba] = id;
    active[bb] = 0;
  }
  return tree;
}

std::vector<std::size_t> ClusterTree::leaf_order() const {
  std::vector<std::size_t> order;
  if (nodes.empty()) return order;
  std::vector<std::size_t> stack{nodes.back().id};
  while (!stack.empty()) {
    const ClusterNode& node = nodes[stack.back()];
    stack.pop_back();
    if (node.leaf) {
      order.push_back(node.id);
      continue;
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  return order;
}

TreeOrdered tree_order_matrix(const BlockMatrix& b, const ClusterTree& tree) {
  require(tree.leaves == b.size(), ErrorKind::argument, "tree does not match block matrix size");
  TreeOrdered out;
  out.order = tree.leaf_order();
  const std::size_t n = out.order.size();
  out.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          b.values(static_cast<Eigen::Index>(out.order[i]), static_cast<Eigen::Index>(out.order[j]));
  for (std::size_t p : out.order) out.diag_net.push_back(b.net_of(p));

  // Leaf positions, then span and depth of every internal node.
  std::vector<std::size_t> start(tree.nodes.size()), end(tree.nodes.size()), depth(tree.nodes.size(), 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    start[out.order[pos]] = pos;
    end[out.order[pos]] = pos + 1;
  }
  for (std::size_t k = tree.leaves; k < tree.nodes.size(); ++k) {
    const auto& node = tree.nodes[k];
    start[k] = std::min(start[node.left], start[node.right]);
    end[k] = std::max(end[node.left], end[node.right]);
  }
  for (std::size_t k = tree.nodes.size(); k-- > tree.leaves;) {
    const auto& node = tree.nodes[k];
    depth[node.left] = depth[k] + 1;
    depth[node.right] = depth[k] + 1;
  }
  for (std::size_t k = tree.leaves; k < tree.nodes.size(); ++k)
    out.segments.push_back({k, start[k], end[k], depth[k]});
  return out;
}

}  // namespace repalign
