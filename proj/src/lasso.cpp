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

#include "repalign/lasso.hpp"

#include <algorithm>
#include <cmath>

namespace repalign {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double coordinate_violation(double grad, double w, double decay) {
  if (w > 0) return std::abs(grad + decay);
  if (w < 0) return std::abs(grad - decay);
  return std::max(0.0, std::abs(grad) - decay);
}

struct Moments {
  MatrixD gram;   // X^T X / M
  MatrixD cross;  // X^T Y / M  (source x target)
  VectorD target_sq;  // per target y^T y / M
};

Moments moments(const NormalizedLayer& source, const NormalizedLayer& target) {
  require(source.values.rows() == target.values.rows(), ErrorKind::alignment,
          "mapping needs sample-aligned layers: " + std::to_string(source.values.rows()) + " vs " +
              std::to_string(target.values.rows()) + " rows");
  const double m = static_cast<double>(source.values.rows());
  Moments mo;
  mo.gram = (source.values.transpose() * source.values) / m;
  mo.cross = (source.values.transpose() * target.values) / m;
  mo.target_sq = target.values.colwise().squaredNorm().transpose() / m;
  return mo;
}

double data_loss(const NormalizedLayer& source, const NormalizedLayer& target, const MatrixD& w) {
  const MatrixD resid = target.values - source.values * w.transpose();
  return 0.5 * resid.squaredNorm() / static_cast<double>(source.values.rows());
}

}  // namespace

NormalizedLayer normalize(const MatrixD& values, double dims) {
  require(values.rows() >= 2 && values.cols() >= 1, ErrorKind::argument,
          "normalize needs at least 2 samples and 1 unit");
  require(dims >= 0.0, ErrorKind::argument, "normalization dimension must be positive");
  NormalizedLayer out;
  out.dims = dims > 0.0 ? dims : static_cast<double>(values.cols());
  const double target_std = 1.0 / std::sqrt(out.dims);
  const double m = static_cast<double>(values.rows());
  out.values.resize(values.rows(), values.cols());
  out.shift.resize(static_cast<std::size_t>(values.cols()));
  out.scale.resize(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const auto col = values.col(c);
    const double mu = col.sum() / m;
    const double sd = std::sqrt((col.array() - mu).square().sum() / m);
    const bool constant = (col.array() == col(0)).all();
    auto k = static_cast<std::size_t>(c);
    out.shift[k] = -mu;
    if (constant || sd == 0.0) {
      out.scale[k] = 0.0;
      out.values.col(c).setZero();
      continue;
    }
    out.scale[k] = target_std / sd;
    out.values.col(c) = (col.array() - mu) * out.scale[k];
  }
  return out;
}

NormalizedLayer normalize(const ActivationMatrix& acts, double dims) {
  return normalize(MatrixD(acts.values().cast<double>()), dims);
}

double lambda_max(const NormalizedLayer& source, const NormalizedLayer& target) {
  const Moments mo = moments(source, target);
  return mo.cross.cwiseAbs().maxCoeff();
}

double baseline_loss(const NormalizedLayer& target) {
  return 0.5 * target.values.squaredNorm() / static_cast<double>(target.values.rows());
}

double kkt_residual(const NormalizedLayer& source, const NormalizedLayer& target,
                    const MatrixD& weights, double decay) {
  const Moments mo = moments(source, target);
  require(weights.rows() == target.values.cols() && weights.cols() == source.values.cols(),
          ErrorKind::argument, "weight matrix shape does not match layers");
  // d/dW of the data term: W G - C^T
  const MatrixD grad = weights * mo.gram - mo.cross.transpose();
  double worst = 0.0;
  for (Eigen::Index t = 0; t < weights.rows(); ++t)
    for (Eigen::Index s = 0; s < weights.cols(); ++s) {
      if (mo.gram(s, s) == 0.0) continue;  // dead source column: coordinate is inert
      worst = std::max(worst, coordinate_violation(grad(t, s), weights(t, s), decay));
    }
  return worst;
}

MappingModel fit_mapping(const NormalizedLayer& source, const NormalizedLayer& target,
                         const LassoOptions& opts) {
  require(opts.decay >= 0.0, ErrorKind::argument, "decay must be non-negative");
  require(opts.tol > 0.0, ErrorKind::argument, "tolerance must be positive");
  const Moments mo = moments(source, target);
  const auto ns = static_cast<std::size_t>(source.values.cols());
  const auto nt = static_cast<std::size_t>(target.values.cols());
  const double decay = opts.decay;

  MappingModel model;
  model.decay = decay;
  model.weight_eps = opts.weight_eps;
  model.weights = MatrixD::Zero(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(ns));
  std::vector<std::size_t> sweeps(nt, 0);
  std::vector<double> violation(nt, 0.0);
  if (opts.record_objective) model.report.objective_trace.assign(nt, {});

  parallel_for(nt, opts.workers, [&](std::size_t t) {
    const auto tt = static_cast<Eigen::Index>(t);
    const VectorD c = mo.cross.col(tt);
    VectorD w = VectorD::Zero(static_cast<Eigen::Index>(ns));
    VectorD q = VectorD::Zero(static_cast<Eigen::Index>(ns));  // G w
    auto objective = [&] {
      return 0.5 * w.dot(q) - c.dot(w) + 0.5 * mo.target_sq(tt) + decay * w.lpNorm<1>();
    };
    auto residual = [&] {
      double worst = 0.0;
      for (std::size_t j = 0; j < ns; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (mo.gram(jj, jj) == 0.0) continue;
        worst = std::max(worst, coordinate_violation(q(jj) - c(jj), w(jj), decay));
      }
      return worst;
    };
    std::size_t sweep = 0;
    double viol = residual();
    while (viol > opts.tol && sweep < opts.max_iter) {
      for (std::size_t j = 0; j < ns; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double gjj = mo.gram(jj, jj);
        if (gjj == 0.0) continue;
        const double old = w(jj);
        const double z = c(jj) - (q(jj) - gjj * old);
        const double updated = soft_threshold(z, decay) / gjj;
        if (updated != old) {
          q += mo.gram.col(jj) * (updated - old);
          w(jj) = updated;
        }
      }
      ++sweep;
      if (sweep % 64 == 0) q = mo.gram * w;  // refresh against drift
      if (opts.record_objective) model.report.objective_trace[t].push_back(objective());
      viol = residual();
    }
    model.weights.row(tt) = w.transpose();
    sweeps[t] = sweep;
    violation[t] = viol;
  });

  model.report.max_sweeps = *std::max_element(sweeps.begin(), sweeps.end());
  model.report.kkt_residual = kkt_residual(source, target, model.weights, decay);
  model.report.converged = *std::max_element(violation.begin(), violation.end()) <= opts.tol;
  model.loss = data_loss(source, target, model.weights);
  model.objective = model.loss + decay * model.weights.cwiseAbs().sum();
  std::size_t nnz = 0;
  for (Eigen::Index t = 0; t < model.weights.rows(); ++t)
    for (Eigen::Index s = 0; s < model.weights.cols(); ++s)
      if (std::abs(model.weights(t, s)) > opts.weight_eps) ++nnz;
  model.nnz_per_target = static_cast<double>(nnz) / static_cast<double>(std::max<std::size_t>(1, nt));
  return model;
}

std::vector<double> default_decays() { return {0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}; }

SweepResult decay_sweep(const NormalizedLayer& source, const NormalizedLayer& target,
                        const std::vector<double>& decays, LassoOptions opts) {
  require(!decays.empty(), ErrorKind::argument, "decay sweep needs at least one decay");
  SweepResult out;
  for (double d : decays) {
    opts.decay = d;
    MappingModel m = fit_mapping(source, target, opts);
    out.table.push_back({d, m.loss, m.objective, m.nnz_per_target, m.report.kkt_residual,
                         m.report.max_sweeps});
    out.models.push_back(std::move(m));
  }
  return out;
}

std::vector<std::vector<Predictor>> predictor_sets(const MappingModel& model, std::size_t k) {
  std::vector<std::vector<Predictor>> out(static_cast<std::size_t>(model.weights.rows()));
  for (Eigen::Index t = 0; t < model.weights.rows(); ++t) {
    auto& set = out[static_cast<std::size_t>(t)];
    for (Eigen::Index s = 0; s < model.weights.cols(); ++s)
      if (std::abs(model.weights(t, s)) > model.weight_eps)
        set.push_back({static_cast<std::size_t>(s), model.weights(t, s)});
    std::stable_sort(set.begin(), set.end(), [](const Predictor& a, const Predictor& b) {
      return std::abs(a.weight) > std::abs(b.weight);
    });
    if (set.size() > k) set.resize(k);
  }
  return out;
}

}  // namespace repalign
