// Copyright 2026 The fedsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDSIM_TESTS_TEST_UTIL_H_
#define FEDSIM_TESTS_TEST_UTIL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "fedsim/data.h"
#include "fedsim/matrix.h"
#include "fedsim/nn.h"
#include "fedsim/rng.h"

namespace fedsim::testing {

// Glorot init plus random biases, so bias paths are exercised too.
inline Model RandomModel(const std::vector<std::size_t>& dims, uint64_t seed) {
  Model m = InitModel(dims, seed);
  Rng rng(DeriveSeed(seed, 99));
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    for (double& b : m.mutable_biases(l)) b = rng.Uniform(-0.5, 0.5);
  }
  return m;
}

inline BinaryFeatures RandomBinary(std::size_t rows, std::size_t cols,
                                   double p, Rng& rng) {
  BinaryFeatures x(cols);
  std::vector<uint32_t> active;
  for (std::size_t r = 0; r < rows; ++r) {
    active.clear();
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng.Bernoulli(p)) active.push_back(static_cast<uint32_t>(c));
    }
    x.AppendRow(active);
  }
  return x;
}

// A small learnable silo: the label leans on the first feature. Always has
// both classes.
inline SiloDataset ToySilo(const std::string& id, std::size_t n,
                           std::size_t dim, uint64_t seed) {
  Rng rng(seed);
  BinaryFeatures x = RandomBinary(n, dim, 0.3, rng);
  std::vector<uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    const bool first = !row.empty() && row[0] == 0;
    y[i] = rng.Bernoulli(first ? 0.8 : 0.2) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  return SiloDataset(id, std::move(x), std::move(y));
}

inline std::vector<SiloDataset> ToySilos(std::size_t k, std::size_t n,
                                         std::size_t dim, uint64_t seed) {
  std::vector<SiloDataset> silos;
  for (std::size_t i = 0; i < k; ++i) {
    silos.push_back(ToySilo(SiloIdForIndex(i, k), n + 7 * i, dim,
                            DeriveSeed(seed, i)));
  }
  return silos;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fedsim_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fedsim::testing

#endif  // FEDSIM_TESTS_TEST_UTIL_H_
