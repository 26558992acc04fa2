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

#include "repalign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace repalign {

namespace {

// Sequential sum with four interleaved accumulators; fixed order, so the
// result is independent of threading and dot(x, y) == dot(y, x) bitwise.
double fixed_dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) s0 += x[i] * y[i];
  return (s0 + s1) + (s2 + s3);
}

// Columns centered and scaled so that corr(i, j) = dot(z_i, z_j) / M.
// Dead columns are left as zeros.
MatrixD standardized(const ActivationMatrix& acts, const LayerStats& st) {
  const auto m = static_cast<Eigen::Index>(acts.samples());
  MatrixD z(m, static_cast<Eigen::Index>(acts.units()));
  for (std::size_t c = 0; c < acts.units(); ++c) {
    const auto col = acts.column(c);
    auto out = z.col(static_cast<Eigen::Index>(c));
    if (st.is_dead(c)) {
      out.setZero();
      continue;
    }
    for (Eigen::Index r = 0; r < m; ++r)
      out(r) = (static_cast<double>(col[static_cast<std::size_t>(r)]) - st.mean[c]) / st.std[c];
  }
  return z;
}

double clamp_corr(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

LayerStats layer_stats(const ActivationMatrix& acts) {
  const std::size_t m = acts.samples();
  LayerStats st;
  st.mean.resize(acts.units());
  st.std.resize(acts.units());
  for (std::size_t c = 0; c < acts.units(); ++c) {
    const auto col = acts.column(c);
    double sum = 0.0;
    for (float v : col) sum += v;
    const double mu = sum / static_cast<double>(m);
    double ss = 0.0;
    for (float v : col) {
      const double d = static_cast<double>(v) - mu;
      ss += d * d;
    }
    // A constant column can still leave rounding residue in ss; test exactly.
    const bool constant = std::all_of(col.begin(), col.end(), [&](float v) { return v == col[0]; });
    st.mean[c] = constant ? static_cast<double>(col[0]) : mu;
    st.std[c] = constant ? 0.0 : std::sqrt(ss / static_cast<double>(m));
    if (st.std[c] == 0.0) st.dead_units.push_back(c);
  }
  return st;
}

CorrMatrix corr_within(const ActivationMatrix& acts, unsigned workers) {
  const auto st = layer_stats(acts);
  const MatrixD z = standardized(acts, st);
  const std::size_t u = acts.units();
  const std::size_t m = acts.samples();
  CorrMatrix out{CorrKind::within, acts.net(), acts.net(), MatrixD::Zero(u, u)};
  parallel_for(u, workers, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (st.is_dead(i)) return;
    out.values(ii, ii) = 1.0;
    for (std::size_t j = i + 1; j < u; ++j) {
      if (st.is_dead(j)) continue;
      const double c = clamp_corr(
          fixed_dot(z.col(ii).data(), z.col(static_cast<Eigen::Index>(j)).data(), m) /
          static_cast<double>(m));
      out.values(ii, static_cast<Eigen::Index>(j)) = c;
    }
  });
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < i; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  return out;
}

CorrMatrix corr_between(const ActivationMatrix& a, const ActivationMatrix& b, unsigned workers) {
  require(a.samples() == b.samples(), ErrorKind::alignment,
          "between-net correlation needs sample-aligned matrices: " + std::to_string(a.samples()) +
              " vs " + std::to_string(b.samples()) + " rows");
  const auto sa = layer_stats(a);
  const auto sb = layer_stats(b);
  const MatrixD za = standardized(a, sa);
  const MatrixD zb = standardized(b, sb);
  const std::size_t m = a.samples();
  CorrMatrix out{CorrKind::between, a.net(), b.net(), MatrixD::Zero(a.units(), b.units())};
  parallel_for(a.units(), workers, [&](std::size_t i) {
    if (sa.is_dead(i)) return;
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < b.units(); ++j) {
      if (sb.is_dead(j)) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      out.values(ii, jj) =
          clamp_corr(fixed_dot(za.col(ii).data(), zb.col(jj).data(), m) / static_cast<double>(m));
    }
  });
  return out;
}

std::vector<MeanSpectrum> sorted_mean_spectrum(const std::vector<std::string>& nets,
                                               const std::vector<LayerStats>& stats) {
  require(!stats.empty(), ErrorKind::argument, "mean spectrum needs at least one net");
  require(nets.size() == stats.size(), ErrorKind::argument, "one net name per LayerStats");
  std::vector<MeanSpectrum> out;
  for (std::size_t n = 0; n < stats.size(); ++n) {
    require(stats[n].units() == stats[0].units(), ErrorKind::data,
            "mean spectrum needs equal layer widths");
    MeanSpectrum s{nets[n], stats[n].mean, 0.0};
    std::sort(s.sorted_means.begin(), s.sorted_means.end(), std::greater<>());
    const double lo = s.sorted_means.back();
    s.max_min_ratio = lo > 0 ? s.sorted_means.front() / lo : std::numeric_limits<double>::infinity();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace repalign
