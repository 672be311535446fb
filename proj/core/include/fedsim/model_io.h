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

#ifndef FEDSIM_MODEL_IO_H_
#define FEDSIM_MODEL_IO_H_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fedsim/nn.h"

namespace fedsim {

// Binary model container. All integers and floats are little-endian.
//
//   offset  size  field
//   0       5     magic "FADL1"
//   5       4     u32 layer count L
//   then per layer, in order:
//           4     u32 in_dim
//           4     u32 out_dim
//           1     u8  activation (0 = relu, 1 = sigmoid)
//           8*in_dim*out_dim  f64 weights, row-major (in_dim rows)
//           8*out_dim         f64 biases
//
// Doubles are written as their IEEE-754 bit patterns, so a save/load round
// trip is bit-exact. Nothing follows the last layer.
inline constexpr char kModelMagic[] = "FADL1";

void WriteModel(const Model& model, std::ostream& out);
// Throws ParseError on a bad magic, truncated stream, trailing bytes, or a
// layer stack that does not form a valid Model.
Model ReadModel(std::istream& in);

void SaveModel(const Model& model, const std::filesystem::path& path);
Model LoadModel(const std::filesystem::path& path);

std::string SerializeModel(const Model& model);

// FNV-1a of the serialized bytes; used as a model snapshot id.
uint64_t ModelChecksum(const Model& model);

}  // namespace fedsim

#endif  // FEDSIM_MODEL_IO_H_
