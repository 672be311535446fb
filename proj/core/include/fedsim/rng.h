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

#ifndef FEDSIM_RNG_H_
#define FEDSIM_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace fedsim {

// Deterministic seed plumbing. Every random stream in the library is derived
// from an explicit seed through these functions, so results never depend on
// thread scheduling or on the standard library's distribution algorithms.

uint64_t SplitMix64(uint64_t x);

// Mixes `salt` into `base`. Not commutative: DeriveSeed(a, b) and
// DeriveSeed(b, a) are unrelated streams.
uint64_t DeriveSeed(uint64_t base, uint64_t salt);

// 64-bit FNV-1a.
uint64_t HashBytes(std::span<const unsigned char> bytes,
                   uint64_t state = 0xcbf29ce484222325ULL);
uint64_t HashString(std::string_view s);

// Thin wrapper around mt19937_64 whose transforms are defined here rather
// than by <random>'s implementation-specific distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double Uniform01();

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  uint64_t Below(uint64_t n);

  // Standard normal via Box-Muller (no cached second value).
  double Normal();

  bool Bernoulli(double p) { return Uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

// In-place Fisher-Yates shuffle.
void Shuffle(std::span<std::size_t> values, Rng& rng);

}  // namespace fedsim

#endif  // FEDSIM_RNG_H_
