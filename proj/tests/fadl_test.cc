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

#include "fedsim/fadl.h"

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/audit.h"
#include "fedsim/errors.h"
#include "fedsim/training.h"
#include "test_util.h"

namespace fedsim {
namespace {

using testing::RandomModel;
using testing::ToySilos;

FadlConfig SmallConfig(std::size_t stage2_epochs) {
  FadlConfig c;
  c.stage1.global_cycles = 2;
  c.stage1.local_epochs = 2;
  c.stage1.batch_size = 8;
  c.stage1.learning_rate = 0.1;
  c.stage1.lambda = 0.001;
  c.stage1.master_seed = 3;
  c.stage2_epochs = stage2_epochs;
  return c;
}

TEST(FadlTest, FirstLayerStaysSharedAndUpperLayersSpecialize) {
  const auto silos = ToySilos(5, 60, 6, 1);
  const FadlResult r =
      RunFadl(silos, RandomModel({6, 5, 4, 1}, 2), SmallConfig(3));
  const Model& shared = r.ensemble.shared_model();
  ASSERT_EQ(r.ensemble.size(), 5u);
  for (const auto& [id, model] : r.ensemble.models()) {
    EXPECT_TRUE(BitIdentical(model.layer(0), shared.layer(0))) << id;
    EXPECT_FALSE(BitIdentical(model.layer(1), shared.layer(1))) << id;
  }
}

TEST(FadlTest, StageOneMatchesFederatedRun) {
  const auto silos = ToySilos(3, 50, 6, 1);
  const Model init = RandomModel({6, 5, 1}, 2);
  const FadlConfig c = SmallConfig(2);
  const FadlResult r = RunFadl(silos, init, c);
  const FederatedResult fed = RunFederated(silos, init, c.stage1);
  EXPECT_TRUE(BitIdentical(r.ensemble.shared_model(), fed.model));
  EXPECT_EQ(r.stage1_trace.cycles.size(), 2u);
}

TEST(FadlTest, StageTwoContinuesEachSiloStream) {
  const auto silos = ToySilos(2, 50, 6, 1);
  const Model init = RandomModel({6, 5, 1}, 2);
  const FadlConfig c = SmallConfig(3);
  const FadlResult r = RunFadl(silos, init, c);
  for (const SiloDataset& silo : silos) {
    TrainSpec s;
    s.epochs = 3;
    s.batch_size = 8;
    s.learning_rate = 0.1;
    s.lambda = 0.001;
    s.shuffle_seed = SiloSeed(3, silo.silo_id());
    s.epoch_offset = 4;
    s.freeze_mask = {true, false};
    const Model expect =
        Train(r.ensemble.shared_model(), silo.features(), silo.labels(), s);
    EXPECT_TRUE(BitIdentical(r.ensemble.ModelFor(silo.silo_id()), expect));
  }
}

TEST(FadlTest, ZeroStageTwoEpochsKeepsStageOneModel) {
  const auto silos = ToySilos(5, 40, 6, 4);
  const FadlResult r = RunFadl(silos, RandomModel({6, 4, 1}, 2), SmallConfig(0));
  for (const auto& [id, model] : r.ensemble.models()) {
    EXPECT_TRUE(BitIdentical(model, r.ensemble.shared_model())) << id;
  }
}

TEST(FadlTest, DeterministicAcrossThreadCounts) {
  const auto silos = ToySilos(4, 40, 6, 4);
  const Model init = RandomModel({6, 4, 1}, 2);
  FadlConfig c = SmallConfig(2);
  const FadlResult a = RunFadl(silos, init, c);
  c.stage1.num_threads = 3;
  const FadlResult b = RunFadl(silos, init, c);
  for (const auto& [id, model] : a.ensemble.models()) {
    EXPECT_TRUE(BitIdentical(model, b.ensemble.ModelFor(id)));
  }
}

TEST(FadlTest, NoCrossSiloAccess) {
  audit::ResetCounters();
  FadlConfig c = SmallConfig(2);
  c.stage1.num_threads = 2;
  RunFadl(ToySilos(4, 40, 6, 4), RandomModel({6, 4, 1}, 2), c);
  EXPECT_EQ(audit::CrossSiloAccessCount(), 0u);
}

// Hand-built ensemble whose per-silo output biases differ, so the score
// reveals which model answered.
SpecializedEnsemble MarkedEnsemble() {
  const Model shared = RandomModel({3, 2, 1}, 1);
  SpecializedEnsemble::SiloModelMap per_silo;
  for (int i = 0; i < 3; ++i) {
    Model m = shared;
    m.mutable_biases(1)[0] = -5.0 + 5.0 * i;
    per_silo.emplace("s" + std::to_string(i), m);
  }
  return SpecializedEnsemble(shared, std::move(per_silo));
}

TEST(FadlTest, RoutingUsesOnlyTheSilosOwnModel) {
  const SpecializedEnsemble e = MarkedEnsemble();
  const Matrix x = Matrix::FromRows({{1.0, 0.0, 1.0}, {0.0, 0.0, 0.0}});
  for (const auto& [id, model] : e.models()) {
    EXPECT_EQ(PredictRouted(e, id, x), Predict(model, x));
  }
  EXPECT_NE(PredictRouted(e, "s0", x), PredictRouted(e, "s1", x));
}

TEST(FadlTest, UnknownSiloPolicy) {
  const SpecializedEnsemble e = MarkedEnsemble();
  const Matrix x = Matrix::FromRows({{1.0, 0.0, 1.0}});
  EXPECT_THROW(PredictRouted(e, "nope", x), NotFoundError);
  EXPECT_THROW(e.ModelFor("nope"), NotFoundError);
  EXPECT_EQ(PredictRouted(e, "nope", x, UnknownSiloPolicy::kFallbackToShared),
            Predict(e.shared_model(), x));
  // A known silo is still routed to its own model under the fallback policy.
  EXPECT_EQ(PredictRouted(e, "s2", x, UnknownSiloPolicy::kFallbackToShared),
            Predict(e.ModelFor("s2"), x));
}

TEST(FadlTest, EnsembleRejectsDivergentFirstLayer) {
  const Model shared = RandomModel({3, 2, 1}, 1);
  Model other = shared;
  other.mutable_weights(0)[0] += 1e-12;
  SpecializedEnsemble::SiloModelMap per_silo;
  per_silo.emplace("a", other);
  EXPECT_THROW(SpecializedEnsemble(shared, per_silo), std::invalid_argument);
  SpecializedEnsemble::SiloModelMap wrong_shape;
  wrong_shape.emplace("a", RandomModel({3, 4, 1}, 1));
  EXPECT_THROW(SpecializedEnsemble(shared, wrong_shape), std::invalid_argument);
}

TEST(FadlTest, EnsembleSaveLoadRoundTrip) {
  testing::TempDir dir;
  const SpecializedEnsemble e = MarkedEnsemble();
  SaveEnsemble(e, dir.path() / "ens");
  const SpecializedEnsemble back = LoadEnsemble(dir.path() / "ens");
  EXPECT_TRUE(BitIdentical(back.shared_model(), e.shared_model()));
  ASSERT_EQ(back.size(), e.size());
  for (const auto& [id, model] : e.models()) {
    EXPECT_TRUE(BitIdentical(back.ModelFor(id), model));
  }
  EXPECT_THROW(LoadEnsemble(dir.path() / "missing"), ParseError);
}

}  // namespace
}  // namespace fedsim
