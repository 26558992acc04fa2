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
#include "repalign/common.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

#include <unistd.h>

namespace testing {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("repalign_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline repalign::MatrixD random_matrix(std::size_t rows, std::size_t cols, repalign::Rng& rng,
                                       double lo = -1.0, double hi = 1.0) {
  repalign::MatrixD m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * rng.uniform();
  return m;
}

inline repalign::ActivationMatrix gaussian_acts(std::size_t samples, std::size_t units, std::uint64_t seed,
                                                const std::string& net = "A") {
  repalign::Rng rng(seed);
  repalign::MatrixF v(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(units));
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<float>(rng.normal());
  return {"layer", net, v};
}

template <typename F>
repalign::ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const repalign::Error& e) {
    return e.kind();
  }
  FAIL("expected a repalign::Error");
  return repalign::ErrorKind::io;
}

}  // namespace testing
