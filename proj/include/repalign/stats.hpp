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

#include <string>
#include <vector>

namespace repalign {

/// Per-unit mean and population standard deviation over all samples.
struct LayerStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::size_t> dead_units;  // ascending; exactly the units with std == 0

  std::size_t units() const { return mean.size(); }
  bool is_dead(std::size_t unit) const { return std[unit] == 0.0; }
};

LayerStats layer_stats(const ActivationMatrix& acts);

enum class CorrKind { within, between };

/// Pearson correlation between units. Entries touching a dead unit are 0; the
/// diagonal of a within-net matrix is exactly 1 for live units.
struct CorrMatrix {
  CorrKind kind = CorrKind::within;
  std::string rows_net;
  std::string cols_net;
  MatrixD values;
};

CorrMatrix corr_within(const ActivationMatrix& acts, unsigned workers = 1);
/// Requires sample-aligned inputs (equal M); widths may differ.
CorrMatrix corr_between(const ActivationMatrix& a, const ActivationMatrix& b,
                        unsigned workers = 1);

struct MeanSpectrum {
  std::string net;
  std::vector<double> sorted_means;  // descending
  double max_min_ratio = 0.0;        // +inf when the smallest mean is <= 0
};

/// Each net's mean vector sorted descending. All inputs must share U.
std::vector<MeanSpectrum> sorted_mean_spectrum(const std::vector<std::string>& nets,
                                               const std::vector<LayerStats>& stats);

}  // namespace repalign
