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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace repalign {

/// Samples x units activation table for one layer of one network. Column i is
/// the sample series of unit i; rows are aligned across networks.
class ActivationMatrix {
 public:
  ActivationMatrix() = default;
  /// Validates shape (M >= 2, U >= 1) and finiteness.
  ActivationMatrix(std::string layer, std::string net, MatrixF values);

  /// Builds from a row-major (sample-major) buffer of M*U floats.
  static ActivationMatrix from_row_major(std::string layer, std::string net,
                                         std::size_t samples, std::size_t units,
                                         std::span<const float> data);

  const std::string& layer() const { return layer_; }
  const std::string& net() const { return net_; }
  std::size_t samples() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t units() const { return static_cast<std::size_t>(values_.cols()); }
  const MatrixF& values() const { return values_; }
  std::span<const float> column(std::size_t unit) const {
    return {values_.data() + unit * samples(), samples()};
  }
  std::vector<float> row_major() const;

 private:
  std::string layer_;
  std::string net_;
  MatrixF values_;
};

enum class MatrixFileFormat { actv, csv };

/// ACTV binary: "ACTV", u32 version=1, u32+bytes layer, u32+bytes net,
/// u64 M, u64 U, then M*U little-endian float32 in sample-major order.
void write_actv(const std::filesystem::path& path, const ActivationMatrix& acts);
/// Raw ACTV writer without ActivationMatrix validation (used for exported
/// similarity matrices, which may have a single row).
void write_actv_raw(const std::filesystem::path& path, const std::string& layer,
                    const std::string& net, std::size_t rows, std::size_t cols,
                    std::span<const float> row_major);

struct RawActv {
  std::string layer;
  std::string net;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<float> data;  // row-major
};
RawActv read_actv_raw(const std::filesystem::path& path);

/// CSV: header row of unit names, then one row per sample.
void write_activation_csv(const std::filesystem::path& path, const ActivationMatrix& acts);

/// Loads ACTV (detected by magic) or CSV (by extension). Layer and net of a CSV
/// file default to the file stem and "".
ActivationMatrix load_activations(const std::filesystem::path& path);

/// Draws n rows uniformly without replacement (partial Fisher-Yates, in draw order).
ActivationMatrix subsample(const ActivationMatrix& acts, std::size_t n, std::uint64_t seed);
/// Row indices subsample() would use.
std::vector<std::size_t> subsample_rows(std::size_t total, std::size_t n, std::uint64_t seed);

struct CatalogEntry {
  std::string net;
  std::string layer;
  std::filesystem::path path;
  std::size_t samples = 0;
  std::size_t units = 0;
};

/// JSON array of {net, layer, path}; relative paths resolve against the
/// catalog's directory. Shapes are filled in from the file headers.
class LayerCatalog {
 public:
  static LayerCatalog load(const std::filesystem::path& path);
  static LayerCatalog from_entries(std::vector<CatalogEntry> entries);
  void save(const std::filesystem::path& path) const;

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const CatalogEntry& find(const std::string& net, const std::string& layer) const;
  std::vector<std::string> nets() const;    // first-appearance order
  std::vector<std::string> layers() const;  // first-appearance order
  ActivationMatrix load(const std::string& net, const std::string& layer) const;

 private:
  void validate() const;
  std::vector<CatalogEntry> entries_;
};

}  // namespace repalign
