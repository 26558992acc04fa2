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

#include "repalign/mi.hpp"

#include <algorithm>
#include <cmath>

namespace repalign {

namespace {

struct Coded {
  std::vector<std::vector<std::uint8_t>> codes;
  std::vector<int> bin_count;
  std::vector<bool> degenerate;
};

Coded encode(const ActivationMatrix& acts, std::span<const std::size_t> rows,
             const BinOptions& opts, unsigned workers) {
  const std::size_t u = acts.units();
  Coded out;
  out.codes.resize(u);
  out.bin_count.resize(u);
  out.degenerate.resize(u);
  std::vector<char> degenerate(u, 0);
  parallel_for(u, workers, [&](std::size_t c) {
    const auto col = acts.column(c);
    std::vector<float> sample(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) sample[r] = col[rows[r]];
    const BinSpec bins = make_bins(sample, opts);
    out.codes[c] = assign_bins(sample, bins);
    out.bin_count[c] = bins.bin_count();
    degenerate[c] = bins.degenerate ? 1 : 0;
  });
  for (std::size_t c = 0; c < u; ++c) out.degenerate[c] = degenerate[c] != 0;
  return out;
}

std::vector<std::size_t> mi_rows(std::size_t total, const MIOptions& opts) {
  const std::size_t n = std::min(opts.samples, total);
  if (n == total) {
    std::vector<std::size_t> all(total);
    for (std::size_t i = 0; i < total; ++i) all[i] = i;
    return all;
  }
  return subsample_rows(total, n, opts.seed);
}

}  // namespace

int BinSpec::bin_of(double v) const {
  if (v <= zero_threshold) return 0;
  const auto it = std::lower_bound(edges.begin(), edges.end(), v);
  return 1 + static_cast<int>(it - edges.begin());
}

BinSpec make_bins(std::span<const float> column, const BinOptions& opts) {
  require(opts.mass_bins >= 1 && opts.mass_bins <= 254, ErrorKind::argument,
          "mass bin count must be in [1, 254]");
  require(column.size() >= static_cast<std::size_t>(opts.mass_bins), ErrorKind::argument,
          "need at least " + std::to_string(opts.mass_bins) + " samples to bin a unit");
  BinSpec spec;
  spec.zero_threshold = opts.zero_threshold;
  std::vector<double> pos;
  pos.reserve(column.size());
  for (float v : column)
    if (static_cast<double>(v) > opts.zero_threshold) pos.push_back(v);
  spec.positive_count = pos.size();
  if (pos.empty()) {
    spec.degenerate = true;
    return spec;
  }
  std::sort(pos.begin(), pos.end());
  const std::size_t n = pos.size();
  const auto k_bins = static_cast<std::size_t>(opts.mass_bins);
  for (std::size_t k = 1; k < k_bins; ++k) {
    // Upper edge of the k-th equal-count bin: the ceil(k n / K)-th order statistic.
    std::size_t rank = (k * n + k_bins - 1) / k_bins;
    if (rank == 0) rank = 1;
    const double edge = pos[rank - 1];
    if (edge >= pos.back()) break;  // the last bin already reaches the maximum
    if (spec.edges.empty() || edge > spec.edges.back()) spec.edges.push_back(edge);
  }
  return spec;
}

std::vector<std::uint8_t> assign_bins(std::span<const float> column, const BinSpec& bins) {
  std::vector<std::uint8_t> codes(column.size());
  for (std::size_t i = 0; i < column.size(); ++i)
    codes[i] = static_cast<std::uint8_t>(bins.bin_of(column[i]));
  return codes;
}

double binned_entropy(std::span<const std::uint8_t> codes, int bin_count) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bin_count), 0);
  for (auto c : codes) ++counts[c];
  const double n = static_cast<double>(codes.size());
  std::vector<double> terms;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      terms.push_back(-p * std::log(p));
    }
  std::sort(terms.begin(), terms.end());
  double h = 0.0;
  for (double t : terms) h += t;
  return h;
}

double mutual_information(std::span<const std::uint8_t> x, int x_bins,
                          std::span<const std::uint8_t> y, int y_bins) {
  require(x.size() == y.size(), ErrorKind::alignment,
          "mutual information needs equal-length series: " + std::to_string(x.size()) + " vs " +
              std::to_string(y.size()));
  require(!x.empty(), ErrorKind::argument, "mutual information of empty series");
  const auto nx = static_cast<std::size_t>(x_bins);
  const auto ny = static_cast<std::size_t>(y_bins);
  std::vector<std::uint64_t> joint(nx * ny, 0), cx(nx, 0), cy(ny, 0);
  for (std::size_t s = 0; s < x.size(); ++s) {
    ++joint[x[s] * ny + y[s]];
    ++cx[x[s]];
    ++cy[y[s]];
  }
  const double n = static_cast<double>(x.size());
  // Terms are summed in sorted order so that swapping x and y, which only
  // permutes the multiset of terms, cannot change the result.
  std::vector<double> terms;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) {
      const auto c = joint[a * ny + b];
      if (c == 0) continue;
      const double cab = static_cast<double>(c);
      const double marg = static_cast<double>(cx[a]) * static_cast<double>(cy[b]);
      terms.push_back(cab / n * std::log(cab * n / marg));
    }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  return std::max(mi, 0.0);
}

double mutual_information(std::span<const float> x, std::span<const float> y, const BinSpec& bx,
                          const BinSpec& by) {
  require(x.size() == y.size(), ErrorKind::alignment,
          "mutual information needs equal-length series: " + std::to_string(x.size()) + " vs " +
              std::to_string(y.size()));
  if (bx.degenerate || by.degenerate) return 0.0;
  const auto cx = assign_bins(x, bx);
  const auto cy = assign_bins(y, by);
  return mutual_information(cx, bx.bin_count(), cy, by.bin_count());
}

MIMatrix mi_between(const ActivationMatrix& a, const ActivationMatrix& b, const MIOptions& opts) {
  require(a.samples() == b.samples(), ErrorKind::alignment,
          "between-net MI needs sample-aligned matrices: " + std::to_string(a.samples()) + " vs " +
              std::to_string(b.samples()) + " rows");
  const auto rows = mi_rows(a.samples(), opts);
  const Coded ca = encode(a, rows, opts.bins, opts.workers);
  const Coded cb = encode(b, rows, opts.bins, opts.workers);
  MIMatrix out{MatrixD::Zero(a.units(), b.units()), rows.size()};
  parallel_for(a.units(), opts.workers, [&](std::size_t i) {
    if (ca.degenerate[i]) return;
    for (std::size_t j = 0; j < b.units(); ++j) {
      if (cb.degenerate[j]) continue;
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mutual_information(ca.codes[i], ca.bin_count[i], cb.codes[j], cb.bin_count[j]);
    }
  });
  return out;
}

MIMatrix mi_within(const ActivationMatrix& a, const MIOptions& opts) {
  const auto rows = mi_rows(a.samples(), opts);
  const Coded ca = encode(a, rows, opts.bins, opts.workers);
  const std::size_t u = a.units();
  MIMatrix out{MatrixD::Zero(u, u), rows.size()};
  parallel_for(u, opts.workers, [&](std::size_t i) {
    if (ca.degenerate[i]) return;
    for (std::size_t j = i; j < u; ++j) {
      if (ca.degenerate[j]) continue;
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mutual_information(ca.codes[i], ca.bin_count[i], ca.codes[j], ca.bin_count[j]);
    }
  });
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < i; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace repalign
