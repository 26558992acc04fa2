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

#include "repalign/synth.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>

namespace repalign {

namespace {

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

// Columns standardized with population moments (dead columns stay 0).
MatrixD standardize(const MatrixF& x) {
  MatrixD z = x.cast<double>();
  const double m = static_cast<double>(z.rows());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double mu = z.col(c).sum() / m;
    z.col(c).array() -= mu;
    const double sd = std::sqrt(z.col(c).squaredNorm() / m);
    if (sd > 0) z.col(c) /= sd;
  }
  return z;
}

double column_std(const VectorD& v) {
  const double m = static_cast<double>(v.size());
  const double mu = v.sum() / m;
  return std::sqrt((v.array() - mu).square().sum() / m);
}

// Adds relative noise to a signal column and stores it as float.
void emit_column(MatrixF& out, Eigen::Index col, const VectorD& signal, double rel_sigma, Rng& rng) {
  const double sd = column_std(signal);
  const double amp = rel_sigma * (sd > 0 ? sd : 1.0);
  for (Eigen::Index r = 0; r < signal.size(); ++r) {
    double v = signal(r);
    if (amp > 0) v += amp * rng.normal();
    out(r, col) = static_cast<float>(v);
  }
}

double unit_scale(Rng& rng) { return std::pow(10.0, 2.0 * rng.uniform() - 1.0); }

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::permuted: return "permuted";
    case Scenario::rotated_blocks: return "rotated_blocks";
    case Scenario::mixed: return "mixed";
    case Scenario::planted_clusters: return "planted_clusters";
    case Scenario::sparse_linear: return "sparse_linear";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& name) {
  for (auto s : {Scenario::permuted, Scenario::rotated_blocks, Scenario::mixed,
                 Scenario::planted_clusters, Scenario::sparse_linear})
    if (name == to_string(s)) return s;
  fail(ErrorKind::argument, "unknown fixture scenario '" + name + "'");
}

void FixtureSpec::validate() const {
  require(units >= 1, ErrorKind::argument, "fixture needs at least one unit");
  require(samples >= 2, ErrorKind::argument, "fixture needs at least two samples");
  require(noise_sigma >= 0.0 && noise_spread >= 1.0, ErrorKind::argument,
          "noise_sigma must be >= 0 and noise_spread >= 1");
  switch (scenario) {
    case Scenario::rotated_blocks:
      require(block_size >= 1 && units % block_size == 0, ErrorKind::argument,
              "block size " + std::to_string(block_size) + " must divide " + std::to_string(units));
      break;
    case Scenario::mixed:
      require(frac_unique >= 0.0 && frac_unique <= 1.0, ErrorKind::argument,
              "frac_unique must lie in [0, 1]");
      break;
    case Scenario::planted_clusters: {
      const auto total = std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
      require(!cluster_sizes.empty() && total <= units, ErrorKind::argument,
              "cluster sizes must be non-empty and sum to at most the unit count");
      require(cluster_strength > 0.0 && cluster_strength < 1.0, ErrorKind::argument,
              "cluster strength must lie in (0, 1)");
      break;
    }
    case Scenario::sparse_linear:
      require(nnz_per_row >= 1 && nnz_per_row <= units, ErrorKind::argument,
              "nnz_per_row must be in [1, units]");
      break;
    case Scenario::permuted: break;
  }
}

MatrixF rectified_units(std::size_t samples, std::size_t units, Rng& rng, MatrixD* latent) {
  MatrixF out(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(units));
  if (latent) latent->resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(units));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double scale = unit_scale(rng);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double z = rng.normal();
      if (latent) (*latent)(r, c) = z;
      out(r, c) = static_cast<float>(scale * std::max(z, 0.0));
    }
  }
  return out;
}

MatrixD random_orthogonal(std::size_t n, Rng& rng) {
  MatrixD g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixD> qr(g);
  MatrixD q = qr.householderQ();
  const MatrixD r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

Fixture generate(const FixtureSpec& spec) {
  spec.validate();
  const std::size_t u = spec.units;
  const auto ue = static_cast<Eigen::Index>(u);
  const auto me = static_cast<Eigen::Index>(spec.samples);
  Rng rng_a(Rng::derive(spec.seed, 1));
  Rng rng_b(Rng::derive(spec.seed, 2));
  Rng rng_noise(Rng::derive(spec.seed, 3));
  Rng rng_struct(Rng::derive(spec.seed, 4));

  GroundTruth truth;
  truth.scenario = spec.scenario;
  truth.noise_sigma.resize(u);
  for (auto& s : truth.noise_sigma) s = spec.noise_sigma * std::pow(spec.noise_spread, rng_struct.uniform());

  MatrixF a;
  MatrixF b(me, ue);
  switch (spec.scenario) {
    case Scenario::permuted:
    case Scenario::mixed: {
      a = rectified_units(spec.samples, u, rng_a);
      truth.permutation = random_permutation(u, rng_struct);
      std::vector<char> unique(u, 0);
      if (spec.scenario == Scenario::mixed) {
        const auto n_unique = static_cast<std::size_t>(std::llround(spec.frac_unique * static_cast<double>(u)));
        auto order = random_permutation(u, rng_struct);
        for (std::size_t k = 0; k < n_unique; ++k) unique[order[k]] = 1;
        for (std::size_t i = 0; i < u; ++i)
          if (unique[i]) truth.unique_units.push_back(i);
      }
      const MatrixF fresh = rectified_units(spec.samples, u, rng_b);
      for (std::size_t i = 0; i < u; ++i) {
        const auto dst = static_cast<Eigen::Index>(truth.permutation[i]);
        const VectorD signal = unique[i] ? VectorD(fresh.col(static_cast<Eigen::Index>(i)).cast<double>())
                                         : VectorD(a.col(static_cast<Eigen::Index>(i)).cast<double>());
        emit_column(b, dst, signal, truth.noise_sigma[static_cast<std::size_t>(dst)], rng_noise);
      }
      break;
    }
    case Scenario::rotated_blocks: {
      a = rectified_units(spec.samples, u, rng_a);
      const MatrixD z = standardize(a);
      for (std::size_t start = 0; start < u; start += spec.block_size) {
        truth.block_starts.push_back(start);
        truth.mixing.push_back(random_orthogonal(spec.block_size, rng_struct));
        const auto bs = static_cast<Eigen::Index>(spec.block_size);
        const MatrixD mixed = z.middleCols(static_cast<Eigen::Index>(start), bs) * truth.mixing.back();
        for (Eigen::Index j = 0; j < bs; ++j) {
          const auto col = static_cast<Eigen::Index>(start) + j;
          const VectorD signal = mixed.col(j) * unit_scale(rng_b);
          emit_column(b, col, signal, truth.noise_sigma[static_cast<std::size_t>(col)], rng_noise);
        }
      }
      break;
    }
    case Scenario::planted_clusters: {
      truth.labels.assign(2 * u, -1);
      const auto slots_a = random_permutation(u, rng_struct);
      const auto slots_b = random_permutation(u, rng_struct);
      std::size_t next = 0;
      for (std::size_t c = 0; c < spec.cluster_sizes.size(); ++c)
        for (std::size_t k = 0; k < spec.cluster_sizes[c]; ++k, ++next) {
          truth.labels[slots_a[next]] = static_cast<long>(c);
          truth.labels[u + slots_b[next]] = static_cast<long>(c);
        }
      const std::size_t nc = spec.cluster_sizes.size();
      MatrixD drivers(me, static_cast<Eigen::Index>(nc));
      for (Eigen::Index r = 0; r < me; ++r)
        for (Eigen::Index c = 0; c < drivers.cols(); ++c) drivers(r, c) = rng_struct.normal();
      const double shared = std::sqrt(spec.cluster_strength);
      const double own = std::sqrt(1.0 - spec.cluster_strength);
      a.resize(me, ue);
      for (int net = 0; net < 2; ++net) {
        Rng& rng = net == 0 ? rng_a : rng_b;
        MatrixF& dst = net == 0 ? a : b;
        for (std::size_t i = 0; i < u; ++i) {
          const long label = truth.labels[net * u + i];
          const double scale = unit_scale(rng);
          VectorD signal(me);
          for (Eigen::Index r = 0; r < me; ++r) {
            const double z = label >= 0 ? shared * drivers(r, label) + own * rng.normal() : rng.normal();
            signal(r) = scale * std::max(z, 0.0);
          }
          if (net == 0)
            emit_column(dst, static_cast<Eigen::Index>(i), signal, 0.0, rng_noise);
          else
            emit_column(dst, static_cast<Eigen::Index>(i), signal, truth.noise_sigma[i], rng_noise);
        }
      }
      break;
    }
    case Scenario::sparse_linear: {
      a = rectified_units(spec.samples, u, rng_a);
      const MatrixD z = standardize(a);
      truth.weights = MatrixD::Zero(ue, ue);
      for (std::size_t t = 0; t < u; ++t) {
        auto order = random_permutation(u, rng_struct);
        for (std::size_t k = 0; k < spec.nnz_per_row; ++k) {
          const double mag = 0.5 + 0.5 * rng_struct.uniform();
          const double sign = rng_struct.uniform() < 0.5 ? -1.0 : 1.0;
          truth.weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(order[k])) = sign * mag;
        }
      }
      const MatrixD signal = z * truth.weights.transpose();
      for (Eigen::Index t = 0; t < ue; ++t)
        emit_column(b, t, VectorD(signal.col(t) * unit_scale(rng_b)),
                    truth.noise_sigma[static_cast<std::size_t>(t)], rng_noise);
      break;
    }
  }
  return Fixture{ActivationMatrix(spec.layer, "A", std::move(a)),
                 ActivationMatrix(spec.layer, "B", std::move(b)), std::move(truth)};
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json j;
  j["scenario"] = to_string(scenario);
  j["noise_sigma"] = noise_sigma;
  if (!permutation.empty()) j["permutation"] = permutation;
  if (!unique_units.empty() || scenario == Scenario::mixed) j["unique_units"] = unique_units;
  if (!block_starts.empty()) {
    j["block_starts"] = block_starts;
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& q : mixing) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index r = 0; r < q.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < q.cols(); ++c) row.push_back(q(r, c));
        rows.push_back(row);
      }
      mats.push_back(rows);
    }
    j["mixing"] = mats;
  }
  if (!labels.empty()) j["labels"] = labels;
  if (weights.size() > 0) {
    nlohmann::json supports = nlohmann::json::array();
    for (Eigen::Index t = 0; t < weights.rows(); ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index s = 0; s < weights.cols(); ++s)
        if (weights(t, s) != 0.0) row.push_back({{"source", s}, {"weight", weights(t, s)}});
      supports.push_back(row);
    }
    j["supports"] = supports;
  }
  return j;
}

}  // namespace repalign
