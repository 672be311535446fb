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

#include "fedsim/federated.h"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

#include "fedsim/audit.h"
#include "fedsim/errors.h"
#include "fedsim/model_io.h"
#include "fedsim/training.h"
#include "test_util.h"

namespace fedsim {
namespace {

using testing::RandomModel;
using testing::ToySilo;
using testing::ToySilos;

Model Scalar(double w, double b = 0.0) {
  return Model({LayerParams{Matrix::FromRows({{w}}), {b}, Activation::kSigmoid}});
}

FedConfig SmallConfig() {
  FedConfig c;
  c.global_cycles = 3;
  c.local_epochs = 2;
  c.batch_size = 8;
  c.learning_rate = 0.1;
  c.lambda = 0.001;
  c.master_seed = 42;
  return c;
}

TEST(AggregationTest, CoefficientsAreCountFractions) {
  const auto c = AggregationCoefficients(std::vector<std::size_t>{1, 3});
  EXPECT_EQ(c[0], 0.25);
  EXPECT_EQ(c[1], 0.75);
  EXPECT_THROW(AggregationCoefficients(std::vector<std::size_t>{}),
               std::invalid_argument);
  EXPECT_THROW(AggregationCoefficients(std::vector<std::size_t>{3, 0}),
               std::invalid_argument);
}

TEST(AggregationTest, CoefficientsSumToOne) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> counts(1 + rng.Below(60));
    for (auto& n : counts) n = 1 + rng.Below(20000);
    const auto c = AggregationCoefficients(counts);
    EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 1.0, 1e-15);
  }
}

TEST(AggregationTest, HandComputedWeightedMeans) {
  // (0, 4) with counts (1, 3): 0.25 * 0 + 0.75 * 4 = 3.
  const std::vector<Model> zero_four{Scalar(0.0), Scalar(4.0)};
  EXPECT_NEAR(Aggregate(zero_four, std::vector<std::size_t>{1, 3})
                  .layer(0).weights(0, 0),
              3.0, 1e-15);
  // (1, 3) with counts (1, 3): 0.25 + 2.25 = 2.5.
  const std::vector<Model> one_three{Scalar(1.0, 2.0), Scalar(3.0, -2.0)};
  const Model m = Aggregate(one_three, std::vector<std::size_t>{1, 3});
  EXPECT_NEAR(m.layer(0).weights(0, 0), 2.5, 1e-15);
  EXPECT_NEAR(m.layer(0).biases[0], -1.0, 1e-15);
}

TEST(AggregationTest, MatchesDirectWeightedSum) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng.Below(6);
    std::vector<Model> models;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < k; ++i) {
      models.push_back(RandomModel({4, 3, 1}, 100 * trial + i));
      counts.push_back(1 + rng.Below(500));
    }
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const Model agg = Aggregate(models, counts);
    for (std::size_t l = 0; l < agg.num_layers(); ++l) {
      const auto w = agg.layer(l).weights.values();
      for (std::size_t j = 0; j < w.size(); ++j) {
        double expect = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          expect += counts[i] / total * models[i].layer(l).weights.values()[j];
        }
        EXPECT_NEAR(w[j], expect, 1e-14);
      }
    }
  }
}

TEST(AggregationTest, IdenticalInputsAreAFixedPoint) {
  const Model m = RandomModel({6, 5, 3, 1}, 4);
  for (std::size_t k : {1, 2, 3, 7}) {
    std::vector<Model> copies(k, m);
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < k; ++i) counts.push_back(13 * i + 1);
    EXPECT_TRUE(BitIdentical(Aggregate(copies, counts), m)) << k;
  }
}

TEST(AggregationTest, BySiloIdIgnoresCallerOrder) {
  const std::vector<Model> models{RandomModel({3, 2, 1}, 1),
                                  RandomModel({3, 2, 1}, 2),
                                  RandomModel({3, 2, 1}, 3)};
  const std::vector<std::string> ids{"c", "a", "b"};
  const std::vector<std::size_t> counts{5, 7, 11};
  const std::vector<Model> sorted_models{models[1], models[2], models[0]};
  const std::vector<std::size_t> sorted_counts{7, 11, 5};
  EXPECT_TRUE(BitIdentical(AggregateBySiloId(ids, models, counts),
                           Aggregate(sorted_models, sorted_counts)));
}

TEST(AggregationTest, RejectsMismatchedInputs) {
  const std::vector<Model> models{RandomModel({3, 2, 1}, 1),
                                  RandomModel({3, 4, 1}, 2)};
  EXPECT_THROW(Aggregate(models, std::vector<std::size_t>{1, 1}),
               std::invalid_argument);
  EXPECT_THROW(Aggregate(std::span<const Model>(models.data(), 1),
                         std::vector<std::size_t>{1, 1}),
               std::invalid_argument);
}

TEST(FederatedTest, SingleSiloReducesToPlainTraining) {
  const std::vector<SiloDataset> silos{ToySilo("only", 75, 6, 3)};
  const Model init = RandomModel({6, 5, 1}, 9);
  FedConfig c = SmallConfig();
  c.global_cycles = 4;
  c.local_epochs = 2;
  const FederatedResult fed = RunFederated(silos, init, c);

  TrainSpec s;
  s.epochs = 8;
  s.batch_size = c.batch_size;
  s.learning_rate = c.learning_rate;
  s.lambda = c.lambda;
  s.shuffle_seed = SiloSeed(c.master_seed, "only");
  const Model plain = Train(init, silos[0].features(), silos[0].labels(), s);
  EXPECT_TRUE(BitIdentical(fed.model, plain));
}

TEST(FederatedTest, LocalSpecContinuesTheSiloEpochStream) {
  FedConfig c = SmallConfig();
  c.local_epochs = 5;
  const TrainSpec s = LocalTrainSpec(c, "h003", 3);
  EXPECT_EQ(s.epochs, 5u);
  EXPECT_EQ(s.epoch_offset, 10u);
  EXPECT_EQ(s.shuffle_seed, SiloSeed(c.master_seed, "h003"));
  EXPECT_NE(SiloSeed(c.master_seed, "h003"), SiloSeed(c.master_seed, "h004"));
}

TEST(FederatedTest, ResultIndependentOfThreadsAndSiloOrder) {
  const auto silos = ToySilos(5, 60, 6, 11);
  std::vector<SiloDataset> reversed(silos.rbegin(), silos.rend());
  const Model init = RandomModel({6, 5, 1}, 2);
  FedConfig c = SmallConfig();
  const FederatedResult one = RunFederated(silos, init, c);
  c.num_threads = 4;
  const FederatedResult four = RunFederated(reversed, init, c);
  EXPECT_TRUE(BitIdentical(one.model, four.model));
  ASSERT_EQ(one.trace.cycles.size(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(one.trace.cycles[t].checksum, four.trace.cycles[t].checksum);
    EXPECT_EQ(one.trace.cycles[t].silo_losses, four.trace.cycles[t].silo_losses);
  }
  EXPECT_EQ(one.trace.cycles.back().checksum, ModelChecksum(one.model));
}

TEST(FederatedTest, IdenticalSilosWithoutShufflingStayAtLocalResult) {
  // Same samples under different ids: every silo computes the same local
  // model, so the aggregate equals it.
  const SiloDataset base = ToySilo("a", 40, 5, 1);
  std::vector<SiloDataset> silos;
  for (const char* id : {"a", "b", "c"}) {
    silos.emplace_back(id, base.features(), base.labels());
  }
  const Model init = RandomModel({5, 4, 1}, 3);
  FedConfig c = SmallConfig();
  c.shuffle = false;
  c.global_cycles = 1;
  const Model fed = RunFederated(silos, init, c).model;
  TrainSpec s = LocalTrainSpec(c, "a", 1);
  EXPECT_TRUE(BitIdentical(fed, Train(init, base.features(), base.labels(), s)));
}

TEST(FederatedTest, NoCrossSiloAccess) {
  audit::ResetCounters();
  const auto silos = ToySilos(4, 50, 6, 5);
  FedConfig c = SmallConfig();
  c.num_threads = 3;
  RunFederated(silos, RandomModel({6, 4, 1}, 1), c);
  EXPECT_EQ(audit::CrossSiloAccessCount(), 0u);
}

TEST(FederatedTest, UsesOnlyTrainSplitAndWeightsByTrainCount) {
  // Two silos; silo b has most of its samples held out, so it must carry
  // weight 10 / (30 + 10) in the single-cycle aggregate.
  const SiloDataset a = ToySilo("a", 30, 4, 1);
  const SiloDataset b_full = ToySilo("b", 40, 4, 2);
  std::vector<Split> tags(40, Split::kTest);
  for (std::size_t i = 0; i < 10; ++i) tags[i] = Split::kTrain;
  const SiloDataset b = b_full.WithSplit(tags);
  const Model init = RandomModel({4, 3, 1}, 3);
  FedConfig c = SmallConfig();
  c.global_cycles = 1;
  const Model fed = RunFederated(std::vector<SiloDataset>{a, b}, init, c).model;

  const LabeledData bt = b.Select(Split::kTrain);
  const std::vector<Model> local{
      Train(init, a.features(), a.labels(), LocalTrainSpec(c, "a", 1)),
      Train(init, bt.features, bt.labels, LocalTrainSpec(c, "b", 1))};
  EXPECT_TRUE(
      BitIdentical(fed, Aggregate(local, std::vector<std::size_t>{30, 10})));
}

TEST(FederatedTest, RejectsInvalidRuns) {
  const Model init = RandomModel({6, 4, 1}, 1);
  const FedConfig c = SmallConfig();
  EXPECT_THROW(RunFederated(std::vector<SiloDataset>{}, init, c),
               std::invalid_argument);
  const std::vector<SiloDataset> dup{ToySilo("a", 20, 6, 1), ToySilo("a", 20, 6, 2)};
  EXPECT_THROW(RunFederated(dup, init, c), std::invalid_argument);
  const std::vector<SiloDataset> wrong_dim{ToySilo("a", 20, 5, 1)};
  EXPECT_THROW(RunFederated(wrong_dim, init, c), ShapeError);
  const SiloDataset s = ToySilo("a", 20, 6, 1);
  const std::vector<SiloDataset> no_train{
      s.WithSplit(std::vector<Split>(20, Split::kTest))};
  EXPECT_THROW(RunFederated(no_train, init, c), std::invalid_argument);
  FedConfig zero = c;
  zero.global_cycles = 0;
  EXPECT_THROW(RunFederated(ToySilos(2, 20, 6, 1), init, zero),
               std::invalid_argument);
}

TEST(FederatedTest, TraceJsonlHasOneObjectPerCycle) {
  const auto silos = ToySilos(2, 30, 4, 1);
  const auto result = RunFederated(silos, RandomModel({4, 3, 1}, 1), SmallConfig());
  std::ostringstream out;
  WriteTraceJsonl(result.trace, out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("cycle").get<std::size_t>(), ++n);
    EXPECT_EQ(j.at("checksum").get<std::string>().size(), 16u);
    EXPECT_TRUE(j.at("silo_loss").contains("h001"));
  }
  EXPECT_EQ(n, 3u);
}

}  // namespace
}  // namespace fedsim
