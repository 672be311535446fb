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

#include "fedsim/model_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "fedsim/errors.h"
#include "fedsim/rng.h"

namespace fedsim {
namespace {

constexpr std::size_t kMagicSize = 5;

void PutU32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void PutF64(std::ostream& out, double d) {
  const auto v = std::bit_cast<uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void ReadExact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ParseError("model file truncated", 0);
  }
}

uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  ReadExact(in, reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

double GetF64(std::istream& in) {
  unsigned char b[8];
  ReadExact(in, reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

uint32_t CheckedU32(std::size_t v) {
  if (v > std::numeric_limits<uint32_t>::max()) {
    throw std::invalid_argument("model dimension exceeds u32");
  }
  return static_cast<uint32_t>(v);
}

}  // namespace

void WriteModel(const Model& model, std::ostream& out) {
  out.write(kModelMagic, kMagicSize);
  PutU32(out, CheckedU32(model.num_layers()));
  for (const LayerParams& l : model.layers()) {
    PutU32(out, CheckedU32(l.in_dim()));
    PutU32(out, CheckedU32(l.out_dim()));
    const char tag = static_cast<char>(l.activation);
    out.write(&tag, 1);
    for (double w : l.weights.values()) PutF64(out, w);
    for (double b : l.biases) PutF64(out, b);
  }
  if (!out) throw std::runtime_error("WriteModel: stream error");
}

Model ReadModel(std::istream& in) {
  char magic[kMagicSize];
  ReadExact(in, magic, kMagicSize);
  if (std::memcmp(magic, kModelMagic, kMagicSize) != 0) {
    throw ParseError("not a model file (bad magic)", 0);
  }
  const uint32_t n_layers = GetU32(in);
  if (n_layers == 0) throw ParseError("model file has no layers", 0);
  std::vector<LayerParams> layers;
  layers.reserve(n_layers);
  for (uint32_t l = 0; l < n_layers; ++l) {
    const uint32_t in_dim = GetU32(in);
    const uint32_t out_dim = GetU32(in);
    char tag;
    ReadExact(in, &tag, 1);
    if (tag != 0 && tag != 1) {
      throw ParseError("unknown activation tag " + std::to_string(tag), 0);
    }
    std::vector<double> w(static_cast<std::size_t>(in_dim) * out_dim);
    for (double& v : w) v = GetF64(in);
    std::vector<double> b(out_dim);
    for (double& v : b) v = GetF64(in);
    try {
      layers.push_back({Matrix(in_dim, out_dim, std::move(w)), std::move(b),
                        static_cast<Activation>(tag)});
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("bad layer: ") + e.what(), 0);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("trailing bytes after last layer", 0);
  }
  try {
    return Model(std::move(layers));
  } catch (const ShapeError& e) {
    throw ParseError(std::string("invalid model: ") + e.what(), 0);
  }
}

void SaveModel(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  WriteModel(model, out);
}

Model LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string(), 0);
  return ReadModel(in);
}

std::string SerializeModel(const Model& model) {
  std::ostringstream out(std::ios::binary);
  WriteModel(model, out);
  return std::move(out).str();
}

uint64_t ModelChecksum(const Model& model) {
  const std::string bytes = SerializeModel(model);
  return HashBytes({reinterpret_cast<const unsigned char*>(bytes.data()),
                    bytes.size()});
}

}  // namespace fedsim
