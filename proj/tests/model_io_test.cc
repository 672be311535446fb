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

#include <cstring>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "fedsim/errors.h"
#include "test_util.h"

namespace fedsim {
namespace {

using testing::RandomModel;

Model Parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return ReadModel(in);
}

TEST(ModelIoTest, RoundTripIsBitExact) {
  Model m = RandomModel({9, 6, 4, 1}, 21);
  m.mutable_weights(0)[0] = -0.0;
  m.mutable_weights(0)[1] = std::numeric_limits<double>::denorm_min();
  m.mutable_biases(1)[2] = 1e308;
  EXPECT_TRUE(BitIdentical(Parse(SerializeModel(m)), m));
}

TEST(ModelIoTest, LayoutMatchesDocumentedFormat) {
  LayerParams out{Matrix::FromRows({{1.5}, {-2.0}}), {0.25}, Activation::kSigmoid};
  const std::string bytes = SerializeModel(Model({out}));
  ASSERT_EQ(bytes.size(), 5u + 4 + (4 + 4 + 1 + 2 * 8 + 8));
  EXPECT_EQ(bytes.substr(0, 5), "FADL1");
  auto u32_at = [&](std::size_t off) {
    return static_cast<uint32_t>(static_cast<unsigned char>(bytes[off])) |
           static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
           static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
           static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
  };
  EXPECT_EQ(u32_at(5), 1u);   // layers
  EXPECT_EQ(u32_at(9), 2u);   // in
  EXPECT_EQ(u32_at(13), 1u);  // out
  EXPECT_EQ(bytes[17], 1);    // sigmoid
  double w0 = 0.0;
  std::memcpy(&w0, bytes.data() + 18, 8);  // host is little-endian
  EXPECT_EQ(w0, 1.5);
  double b = 0.0;
  std::memcpy(&b, bytes.data() + 34, 8);
  EXPECT_EQ(b, 0.25);
}

TEST(ModelIoTest, RejectsCorruptInput) {
  const std::string good = SerializeModel(RandomModel({3, 2, 1}, 1));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(Parse(bad_magic), ParseError);
  EXPECT_THROW(Parse(good.substr(0, good.size() - 1)), ParseError);
  EXPECT_THROW(Parse(good.substr(0, 3)), ParseError);
  EXPECT_THROW(Parse(good + "x"), ParseError);
  EXPECT_THROW(Parse(""), ParseError);
  std::string bad_activation = good;
  bad_activation[17] = 7;
  EXPECT_THROW(Parse(bad_activation), ParseError);
  // A first layer declared sigmoid makes an invalid hidden layer.
  std::string sigmoid_hidden = good;
  sigmoid_hidden[17] = 1;
  EXPECT_THROW(Parse(sigmoid_hidden), ParseError);
}

TEST(ModelIoTest, SaveAndLoadThroughFiles) {
  testing::TempDir dir;
  const Model m = RandomModel({5, 3, 1}, 4);
  SaveModel(m, dir.path() / "m.fadl");
  EXPECT_TRUE(BitIdentical(LoadModel(dir.path() / "m.fadl"), m));
  EXPECT_THROW(LoadModel(dir.path() / "missing.fadl"), ParseError);
}

TEST(ModelIoTest, ChecksumTracksParameters) {
  Model m = RandomModel({5, 3, 1}, 4);
  const uint64_t before = ModelChecksum(m);
  EXPECT_EQ(ModelChecksum(m), before);
  m.mutable_biases(0)[0] += 1e-9;
  EXPECT_NE(ModelChecksum(m), before);
}

}  // namespace
}  // namespace fedsim
