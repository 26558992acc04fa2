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

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace repalign {

enum class Scenario { permuted, rotated_blocks, mixed, planted_clusters, sparse_linear };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

struct FixtureSpec {
  std::size_t units = 32;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  Scenario scenario = Scenario::permuted;
  double noise_sigma = 0.0;   // noise std relative to each B column's signal std
  double noise_spread = 1.0;  // per-unit noise is sigma * spread^u, u ~ U[0, 1)
  std::size_t block_size = 4;          // rotated_blocks
  double frac_unique = 0.1;            // mixed
  std::vector<std::size_t> cluster_sizes;  // planted_clusters, units per net per cluster
  double cluster_strength = 0.8;       // planted_clusters, latent shared-variance fraction
  std::size_t nnz_per_row = 3;         // sparse_linear
  std::string layer = "fixture";

  void validate() const;
};

struct GroundTruth {
  Scenario scenario = Scenario::permuted;
  /// permuted / mixed: B column holding the copy of A unit i.
  std::vector<std::size_t> permutation;
  /// mixed: A units whose partner column in B was resampled independently.
  std::vector<std::size_t> unique_units;
  /// rotated_blocks: block start indices (A and B share the block layout) and
  /// the mixing matrices, b_block = z_block * Q.
  std::vector<std::size_t> block_starts;
  std::vector<MatrixD> mixing;
  /// planted_clusters: cluster id per vertex (A units then B units), -1 = none.
  std::vector<long> labels;
  /// sparse_linear: planted weights in standardized units (target x source).
  MatrixD weights;
  std::vector<double> noise_sigma;  // realized per-B-unit relative noise

  nlohmann::json to_json() const;
};

struct Fixture {
  ActivationMatrix net_a;
  ActivationMatrix net_b;
  GroundTruth truth;
};

/// Fully deterministic in (spec, seed).
Fixture generate(const FixtureSpec& spec);

/// Rectified positive-skewed activations with per-unit scales spanning two
/// decades; `latent` receives the pre-rectification standard normals if given.
MatrixF rectified_units(std::size_t samples, std::size_t units, Rng& rng, MatrixD* latent = nullptr);

/// Haar-random orthogonal matrix.
MatrixD random_orthogonal(std::size_t n, Rng& rng);

}  // namespace repalign
