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

#include "fedsim/training.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/errors.h"
#include "fedsim/nn.h"
#include "test_util.h"

namespace fedsim {
namespace {

using testing::RandomModel;
using testing::ToySilo;

TrainSpec Spec(std::size_t epochs, uint64_t seed = 5) {
  TrainSpec s;
  s.epochs = epochs;
  s.batch_size = 16;
  s.learning_rate = 0.1;
  s.lambda = 0.001;
  s.shuffle_seed = seed;
  return s;
}

TEST(TrainingTest, DeterministicForSameSeed) {
  const SiloDataset silo = ToySilo("a", 100, 8, 1);
  const Model init = RandomModel({8, 6, 1}, 2);
  const Model a = Train(init, silo.features(), silo.labels(), Spec(3));
  const Model b = Train(init, silo.features(), silo.labels(), Spec(3));
  const Model c = Train(init, silo.features(), silo.labels(), Spec(3, 6));
  EXPECT_TRUE(BitIdentical(a, b));
  EXPECT_FALSE(BitIdentical(a, c));
}

TEST(TrainingTest, SplittingEpochsAcrossCallsIsExact) {
  const SiloDataset silo = ToySilo("a", 90, 8, 1);
  const Model init = RandomModel({8, 6, 1}, 2);
  const Model whole = Train(init, silo.features(), silo.labels(), Spec(6));
  Model pieces = init;
  for (std::size_t start = 0; start < 6; start += 2) {
    TrainSpec s = Spec(2);
    s.epoch_offset = start;
    pieces = Train(pieces, silo.features(), silo.labels(), s);
  }
  EXPECT_TRUE(BitIdentical(whole, pieces));
}

TEST(TrainingTest, SparseAndDenseInputsAgree) {
  const SiloDataset silo = ToySilo("a", 70, 8, 3);
  const Model init = RandomModel({8, 6, 1}, 2);
  const Model sparse = Train(init, silo.features(), silo.labels(), Spec(2));
  const Model dense =
      Train(init, silo.features().ToDense(), silo.labels(), Spec(2));
  EXPECT_TRUE(BitIdentical(sparse, dense));
}

TEST(TrainingTest, LossDecreasesOnLearnableData) {
  const SiloDataset silo = ToySilo("a", 400, 10, 4);
  const Model init = RandomModel({10, 8, 1}, 3);
  TrainStats first;
  TrainStats last;
  Train(init, silo.features(), silo.labels(), Spec(1), &first);
  Train(init, silo.features(), silo.labels(), Spec(30), &last);
  EXPECT_LT(last.last_epoch_loss, first.last_epoch_loss);
  EXPECT_EQ(last.steps, 30u * 25);  // 400 / 16 = 25 batches per epoch
}

TEST(TrainingTest, PartialLastBatchIsKept) {
  const SiloDataset silo = ToySilo("a", 35, 4, 4);
  const Model init = RandomModel({4, 3, 1}, 3);
  TrainStats stats;
  Train(init, silo.features(), silo.labels(), Spec(2), &stats);
  EXPECT_EQ(stats.steps, 2u * 3);  // 16 + 16 + 3
}

// One epoch with batch size n and no shuffling is a single full-batch step.
TEST(TrainingTest, FullBatchStepMatchesManualGradientStep) {
  const SiloDataset silo = ToySilo("a", 20, 5, 8);
  const Model init = RandomModel({5, 4, 1}, 6);
  TrainSpec s = Spec(1);
  s.batch_size = 20;
  s.shuffle = false;
  const Model trained = Train(init, silo.features(), silo.labels(), s);
  Model manual = init;
  const Matrix x = silo.features().ToDense();
  const auto g = Backward(init, Forward(init, x).cache, silo.labels(), s.lambda);
  ApplySgdStep(manual, g, s.learning_rate);
  EXPECT_TRUE(BitIdentical(trained, manual));
}

TEST(TrainingTest, FrozenLayersStayBitIdentical) {
  const SiloDataset silo = ToySilo("a", 60, 6, 2);
  const Model init = RandomModel({6, 5, 4, 1}, 8);
  TrainSpec s = Spec(4);
  s.freeze_mask = {true, false, true};
  const Model m = Train(init, silo.features(), silo.labels(), s);
  EXPECT_TRUE(BitIdentical(m.layer(0), init.layer(0)));
  EXPECT_FALSE(BitIdentical(m.layer(1), init.layer(1)));
  EXPECT_TRUE(BitIdentical(m.layer(2), init.layer(2)));
}

TEST(TrainingTest, AllFrozenOrZeroEpochsReturnsCopy) {
  const SiloDataset silo = ToySilo("a", 30, 6, 2);
  const Model init = RandomModel({6, 5, 1}, 8);
  TrainSpec s = Spec(3);
  s.freeze_mask = {true, true};
  EXPECT_TRUE(BitIdentical(Train(init, silo.features(), silo.labels(), s), init));
  EXPECT_TRUE(BitIdentical(
      Train(init, silo.features(), silo.labels(), Spec(0)), init));
}

TEST(TrainingTest, RejectsInvalidSpecs) {
  const SiloDataset silo = ToySilo("a", 30, 6, 2);
  const Model init = RandomModel({6, 5, 1}, 8);
  auto train = [&](TrainSpec s) {
    return Train(init, silo.features(), silo.labels(), s);
  };
  TrainSpec s = Spec(1);
  s.batch_size = 0;
  EXPECT_THROW(train(s), std::invalid_argument);
  s = Spec(1);
  s.learning_rate = 0.0;
  EXPECT_THROW(train(s), std::invalid_argument);
  s = Spec(1);
  s.lambda = -1.0;
  EXPECT_THROW(train(s), std::invalid_argument);
  s = Spec(1);
  s.freeze_mask = {true};
  EXPECT_THROW(train(s), std::invalid_argument);
  EXPECT_THROW(Train(init, BinaryFeatures(6), std::vector<uint8_t>{}, Spec(1)),
               std::invalid_argument);
  EXPECT_THROW(Train(RandomModel({7, 5, 1}, 8), silo.features(), silo.labels(),
                     Spec(1)),
               ShapeError);
}

TEST(TrainingTest, CentralizedPoolsInIdOrder) {
  std::vector<SiloDataset> silos{ToySilo("b", 40, 6, 1), ToySilo("a", 30, 6, 2)};
  std::vector<SiloDataset> reversed{silos[1], silos[0]};
  const Model init = RandomModel({6, 4, 1}, 1);
  const Model m1 = TrainCentralized(silos, init, Spec(3));
  const Model m2 = TrainCentralized(reversed, init, Spec(3));
  EXPECT_TRUE(BitIdentical(m1, m2));

  BinaryFeatures pooled = silos[1].features();
  pooled.Append(silos[0].features());
  std::vector<uint8_t> labels = silos[1].labels();
  labels.insert(labels.end(), silos[0].labels().begin(), silos[0].labels().end());
  EXPECT_TRUE(BitIdentical(m1, Train(init, pooled, labels, Spec(3))));
}

TEST(TrainingTest, CentralizedUsesOnlyTrainSplit) {
  const SiloDataset silo = ToySilo("a", 50, 6, 2);
  std::vector<Split> tags(50, Split::kTrain);
  for (std::size_t i = 40; i < 50; ++i) tags[i] = Split::kTest;
  const SiloDataset split = silo.WithSplit(tags);
  const Model init = RandomModel({6, 4, 1}, 1);
  const LabeledData train = split.Select(Split::kTrain);
  EXPECT_TRUE(BitIdentical(
      TrainCentralized(std::vector<SiloDataset>{split}, init, Spec(2)),
      Train(init, train.features, train.labels, Spec(2))));
}

}  // namespace
}  // namespace fedsim
