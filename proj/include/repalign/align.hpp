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

#include <string>
#include <vector>

namespace repalign {

enum class AssignmentKind { semi, full };

struct MatchPair {
  std::size_t row;
  std::size_t col;
  double score;
};

/// Semi-matching (row-wise argmax, repeats allowed) or full matching
/// (bijection). `permutation[i]` is the column matched to row i.
struct Assignment {
  AssignmentKind kind = AssignmentKind::semi;
  std::vector<MatchPair> pairs;  // one per row, ordered by row
  std::vector<std::size_t> permutation;

  double total() const;
  double mean() const { return pairs.empty() ? 0.0 : total() / static_cast<double>(pairs.size()); }
};

/// Row-wise argmax with lowest-index tie-break.
Assignment semi_match(const MatrixD& similarity);

/// Maximum-weight perfect matching on a square matrix. Among optimal
/// bijections the lexicographically smallest permutation is returned.
Assignment match(const MatrixD& similarity);

/// Reorders columns so that entry (i, i) is the matched score of row i.
MatrixD apply_permutation(const MatrixD& between, const Assignment& full);

struct CurvePoint {
  std::size_t rank;
  std::size_t unit;
  double semi;
  double full;
};

/// Per-unit semi and full scores sorted by descending semi score (ties by unit).
std::vector<CurvePoint> match_curves(const MatrixD& similarity);

/// Fraction of rows whose full-matching score is below threshold.
double unmatched_fraction(const MatrixD& similarity, double threshold);
double unmatched_fraction(const Assignment& full, double threshold);

struct LayerSummaryRow {
  std::string layer;
  double mean_semi = 0;
  double mean_full = 0;
  double frac_same = 0;  // rows where semi and full pick the same column
};

struct LayerAssignments {
  std::string layer;
  Assignment semi;
  Assignment full;
};

std::vector<LayerSummaryRow> layer_summary(const std::vector<LayerAssignments>& layers);

}  // namespace repalign
