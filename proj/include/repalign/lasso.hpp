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

#include <vector>

namespace repalign {

/// Columns shifted to mean 0 and scaled to std 1/sqrt(N); dead columns are 0.
struct NormalizedLayer {
  MatrixD values;  // samples x units
  std::vector<double> shift;
  std::vector<double> scale;
  double dims = 1.0;  // N
};

/// `dims` = 0 selects N = U.
NormalizedLayer normalize(const ActivationMatrix& acts, double dims = 0.0);
NormalizedLayer normalize(const MatrixD& values, double dims = 0.0);

struct LassoOptions {
  double decay = 0.0;
  double tol = 1e-7;         // KKT residual target
  std::size_t max_iter = 100000;  // sweeps per target unit
  double weight_eps = 1e-4;  // |w| above this counts as non-zero
  unsigned workers = 1;
  bool record_objective = false;  // keep per-sweep objectives for inspection
};

struct SolverReport {
  std::size_t max_sweeps = 0;    // largest sweep count over target units
  double kkt_residual = 0.0;     // max over all weights
  bool converged = false;
  std::vector<std::vector<double>> objective_trace;  // per target, per sweep
};

/// Linear map target ~ source * W^T. Loss is (1/M) * 1/2 * ||target - source W^T||_F^2.
struct MappingModel {
  MatrixD weights;  // target units x source units
  double decay = 0.0;
  double loss = 0.0;
  double objective = 0.0;  // loss + decay * ||W||_1
  double nnz_per_target = 0.0;
  double weight_eps = 1e-4;
  SolverReport report;
};

/// Cyclic coordinate descent with exact soft-thresholding. Targets are
/// independent problems; sources are swept in ascending order.
MappingModel fit_mapping(const NormalizedLayer& source, const NormalizedLayer& target,
                         const LassoOptions& opts);

/// Largest decay that still leaves some weight non-zero: max |(1/M) X^T Y|.
double lambda_max(const NormalizedLayer& source, const NormalizedLayer& target);

/// Max violation of the optimality conditions of the penalized problem,
/// computed directly from data (independent of the solver path).
double kkt_residual(const NormalizedLayer& source, const NormalizedLayer& target,
                    const MatrixD& weights, double decay);

/// Loss of the zero predictor.
double baseline_loss(const NormalizedLayer& target);

struct SweepRow {
  double decay;
  double loss;
  double objective;
  double nnz_per_target;
  double kkt_residual;
  std::size_t sweeps;
};

std::vector<double> default_decays();

struct SweepResult {
  std::vector<SweepRow> table;
  std::vector<MappingModel> models;
};

SweepResult decay_sweep(const NormalizedLayer& source, const NormalizedLayer& target,
                        const std::vector<double>& decays, LassoOptions opts);

struct Predictor {
  std::size_t source;
  double weight;
};

/// Per target: up to k source units with |w| > weight_eps, by descending |w|.
std::vector<std::vector<Predictor>> predictor_sets(const MappingModel& model, std::size_t k);

}  // namespace repalign
