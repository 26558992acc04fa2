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

#include "repalign/actstore.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace repalign {

struct BinOptions {
  double zero_threshold = 1e-6;
  int mass_bins = 20;
};

/// Per-unit discretization. Bin 0 is (-inf, zero_threshold]; values above the
/// threshold go to 1 + (index of the first edge >= value), so ties at an edge
/// fall into the lower bin.
struct BinSpec {
  double zero_threshold = 1e-6;
  std::vector<double> edges;  // strictly ascending interior percentile edges
  bool degenerate = false;    // every sample landed in bin 0
  std::size_t positive_count = 0;

  int bin_of(double v) const;
  /// Number of bins a value can land in (1 + mass bins after tie-collapse).
  int bin_count() const { return 1 + (positive_count > 0 ? static_cast<int>(edges.size()) + 1 : 0); }
};

BinSpec make_bins(std::span<const float> column, const BinOptions& opts = {});
std::vector<std::uint8_t> assign_bins(std::span<const float> column, const BinSpec& bins);

/// Plug-in entropy of the realized histogram, in nats.
double binned_entropy(std::span<const std::uint8_t> codes, int bin_count);

/// Plug-in MI (nats) between two discretized series. Symmetric bit-for-bit
/// and clamped at 0; degenerate units give 0.
double mutual_information(std::span<const std::uint8_t> x, int x_bins,
                          std::span<const std::uint8_t> y, int y_bins);
double mutual_information(std::span<const float> x, std::span<const float> y,
                          const BinSpec& bx, const BinSpec& by);

struct MIMatrix {
  MatrixD values;  // nats
  std::size_t sample_count = 0;
};

struct MIOptions {
  std::size_t samples = 60000;  // clipped to M
  std::uint64_t seed = 0;
  BinOptions bins;
  unsigned workers = 1;
};

/// Pairwise MI over the same subsampled rows for every pair. Bin edges come
/// from that subsample.
MIMatrix mi_between(const ActivationMatrix& a, const ActivationMatrix& b, const MIOptions& opts = {});
/// Within-net variant; the diagonal holds each unit's binned entropy.
MIMatrix mi_within(const ActivationMatrix& a, const MIOptions& opts = {});

}  // namespace repalign
