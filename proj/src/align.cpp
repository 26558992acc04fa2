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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace repalign {

namespace {

void require_finite(const MatrixD& s) {
  require(s.rows() > 0 && s.cols() > 0, ErrorKind::argument, "empty similarity matrix");
  require(s.allFinite(), ErrorKind::argument, "similarity matrix has non-finite entries");
}

// Shortest augmenting path with potentials (Hungarian / Jonker-Volgenant
// family). Minimizes cost; returns row->col and leaves feasible duals with
// u[i] + v[j] <= cost(i, j), equality on matched edges.
struct LapSolution {
  std::vector<std::size_t> row_to_col;
  std::vector<double> u, v;
};

LapSolution solve_lap(const MatrixD& cost) {
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based internal arrays; index 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> col_owner(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    col_owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = col_owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) fail(ErrorKind::numeric, "assignment solver found no augmenting path");
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_owner[j0] = col_owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  LapSolution sol;
  sol.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) sol.row_to_col[col_owner[j] - 1] = j - 1;
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  return sol;
}

// Every optimal assignment uses only edges that are tight under an optimal
// dual. Walk rows in order and, for each, take the smallest tight column that
// still admits a perfect matching of the remaining rows, found as an
// alternating cycle through the current matching.
class TightGraphLexMin {
 public:
  TightGraphLexMin(std::vector<std::vector<std::size_t>> adj, std::vector<std::size_t> match)
      : adj_(std::move(adj)), row_to_col_(std::move(match)) {
    const std::size_t n = row_to_col_.size();
    col_to_row_.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) col_to_row_[row_to_col_[r]] = r;
    fixed_.assign(n, 0);
  }

  std::vector<std::size_t> run() {
    const std::size_t n = row_to_col_.size();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c : adj_[r]) {  // adj_ rows are ascending
        if (c >= row_to_col_[r]) break;
        const std::size_t owner = col_to_row_[c];
        if (fixed_[owner]) continue;
        // Need an alternating path: owner gives up c and eventually someone
        // takes row_to_col_[r], freed by r moving to c.
        visited_.assign(n, 0);
        std::vector<std::pair<std::size_t, std::size_t>> path;
        if (augment(owner, row_to_col_[r], path)) {
          for (auto [row, col] : path) {
            row_to_col_[row] = col;
            col_to_row_[col] = row;
          }
          row_to_col_[r] = c;
          col_to_row_[c] = r;
          break;
        }
      }
      fixed_[r] = 1;
    }
    return row_to_col_;
  }

 private:
  // Finds reassignments for `row` (which loses its column) ending at `target`.
  bool augment(std::size_t row, std::size_t target,
               std::vector<std::pair<std::size_t, std::size_t>>& path) {
    visited_[row] = 1;
    for (std::size_t c : adj_[row]) {
      if (c == row_to_col_[row]) continue;
      if (c == target) {
        path.emplace_back(row, c);
        return true;
      }
      const std::size_t next = col_to_row_[c];
      if (fixed_[next] || visited_[next]) continue;
      path.emplace_back(row, c);
      if (augment(next, target, path)) return true;
      path.pop_back();
    }
    return false;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> row_to_col_;
  std::vector<std::size_t> col_to_row_;
  std::vector<char> fixed_;
  std::vector<char> visited_;
};

Assignment make_assignment(AssignmentKind kind, const MatrixD& s, std::vector<std::size_t> perm) {
  Assignment a;
  a.kind = kind;
  a.pairs.reserve(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    a.pairs.push_back({i, perm[i], s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]))});
  a.permutation = std::move(perm);
  return a;
}

}  // namespace

double Assignment::total() const {
  double t = 0.0;
  for (const auto& p : pairs) t += p.score;
  return t;
}

Assignment semi_match(const MatrixD& similarity) {
  require_finite(similarity);
  std::vector<std::size_t> best(static_cast<std::size_t>(similarity.rows()));
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < similarity.cols(); ++j)
      if (similarity(i, j) > similarity(i, arg)) arg = j;
    best[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arg);
  }
  return make_assignment(AssignmentKind::semi, similarity, std::move(best));
}

Assignment match(const MatrixD& similarity) {
  require_finite(similarity);
  require(similarity.rows() == similarity.cols(), ErrorKind::argument,
          "full matching needs a square matrix, got " + std::to_string(similarity.rows()) + "x" +
              std::to_string(similarity.cols()));
  const std::size_t n = static_cast<std::size_t>(similarity.rows());
  const MatrixD cost = -similarity;
  const LapSolution sol = solve_lap(cost);

  const double scale = std::max(1.0, similarity.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale * static_cast<double>(n);
  std::vector<std::vector<std::size_t>> tight(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double reduced = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                             sol.u[i] - sol.v[j];
      if (reduced <= tol || j == sol.row_to_col[i]) tight[i].push_back(j);
    }
  auto perm = TightGraphLexMin(std::move(tight), sol.row_to_col).run();
  return make_assignment(AssignmentKind::full, similarity, std::move(perm));
}

MatrixD apply_permutation(const MatrixD& between, const Assignment& full) {
  require(full.kind == AssignmentKind::full, ErrorKind::argument,
          "apply_permutation needs a full (bijective) assignment");
  require(full.permutation.size() == static_cast<std::size_t>(between.cols()) &&
              between.rows() == between.cols(),
          ErrorKind::argument, "assignment size does not match matrix");
  MatrixD out(between.rows(), between.cols());
  for (std::size_t i = 0; i < full.permutation.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = between.col(static_cast<Eigen::Index>(full.permutation[i]));
  return out;
}

std::vector<CurvePoint> match_curves(const MatrixD& similarity) {
  const Assignment semi = semi_match(similarity);
  const Assignment full = match(similarity);
  std::vector<CurvePoint> pts;
  for (std::size_t i = 0; i < semi.pairs.size(); ++i)
    pts.push_back({0, i, semi.pairs[i].score, full.pairs[i].score});
  std::stable_sort(pts.begin(), pts.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.semi > b.semi; });
  for (std::size_t r = 0; r < pts.size(); ++r) pts[r].rank = r;
  return pts;
}

double unmatched_fraction(const Assignment& full, double threshold) {
  require(threshold >= -1.0 && threshold <= 1.0, ErrorKind::argument,
          "unmatched threshold must lie in [-1, 1]");
  if (full.pairs.empty()) return 0.0;
  const auto below = std::count_if(full.pairs.begin(), full.pairs.end(),
                                   [&](const MatchPair& p) { return p.score < threshold; });
  return static_cast<double>(below) / static_cast<double>(full.pairs.size());
}

double unmatched_fraction(const MatrixD& similarity, double threshold) {
  return unmatched_fraction(match(similarity), threshold);
}

std::vector<LayerSummaryRow> layer_summary(const std::vector<LayerAssignments>& layers) {
  require(!layers.empty(), ErrorKind::argument, "layer summary needs at least one layer");
  std::vector<LayerSummaryRow> rows;
  for (const auto& l : layers) {
    require(l.semi.pairs.size() == l.full.pairs.size(), ErrorKind::argument,
            "semi and full assignments differ in size for layer " + l.layer);
    std::size_t same = 0;
    for (std::size_t i = 0; i < l.semi.pairs.size(); ++i)
      if (l.semi.pairs[i].col == l.full.pairs[i].col) ++same;
    const double n = static_cast<double>(std::max<std::size_t>(1, l.semi.pairs.size()));
    rows.push_back({l.layer, l.semi.mean(), l.full.mean(), static_cast<double>(same) / n});
  }
  return rows;
}

}  // namespace repalign
