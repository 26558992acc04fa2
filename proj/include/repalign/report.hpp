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
#include "repalign/synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace repalign {

struct TopSample {
  std::size_t sample;
  float value;
};

/// The k largest activations of one unit, descending, ties to the lower index.
std::vector<TopSample> top_activating_samples(const ActivationMatrix& acts, std::size_t unit,
                                              std::size_t k = 9);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

/// Matrix CSV with "net:unit" row and column headers.
std::string matrix_csv(const MatrixD& m, const std::string& row_net, const std::string& col_net);
/// Reads a matrix from ACTV layout (float payload) or from a headed CSV.
MatrixD read_matrix(const std::filesystem::path& path);
void write_matrix_actv(const std::filesystem::path& path, const MatrixD& m, const std::string& tag,
                       const std::string& kind);

/// 64-bit FNV-1a, hex encoded.
std::string digest_hex(std::string_view bytes);

/// Everything a command or the pipeline needs; built from a JSON config plus
/// CLI overrides.
struct RunConfig {
  std::string catalog;
  std::vector<std::string> acts;    // direct activation files instead of a catalog
  std::string layer;
  std::vector<std::string> layers;  // pipeline: empty = every catalog layer
  std::vector<std::string> nets;    // empty = every catalog net
  std::string metric = "corr";
  double tau = 0.2;
  std::size_t k = 0;                             // spectral clusters (required) or top-k count
  std::map<std::string, std::size_t> k_per_layer;  // pipeline spectral k overrides
  double alpha = 0.025;
  std::vector<double> decays = {0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  double decay = 1e-4;  // mapping used for HAC
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string format = "csv";
  unsigned workers = 1;
  double threshold = 0.5;
  long unit = -1;  // topk: -1 = all units
  std::size_t topk = 9;
  std::size_t predictors = 5;
  std::size_t mi_samples = 60000;
  std::string mi = "auto";  // auto | on | off
  std::size_t mi_auto_max_units = 512;
  bool bits = false;
  bool signed_weights = false;
  bool layer_norm_metric = false;
  std::size_t restarts = 10;
  double lasso_tol = 1e-8;
  std::size_t lasso_max_iter = 200000;
  double weight_eps = 1e-4;
  double norm_dims = 0.0;
  std::string matrix;   // cached similarity matrix for `match`
  std::string weights;  // cached mapping weights for `hac`
  FixtureSpec fixture;

  static RunConfig from_json(const nlohmann::json& j);
  /// Settings that influence outputs (no out_dir, no worker count).
  nlohmann::json to_json() const;
};

/// Runs one CLI command (stats, corr, mi, match, lasso, hac, spectral, means,
/// topk, pipeline, selftest, gen-fixture). Progress goes to `log`. Returns the
/// process exit status for commands that report pass/fail (selftest), else 0.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

const std::vector<std::string>& command_names();

}  // namespace repalign
