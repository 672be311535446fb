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

#ifndef FEDSIM_FADL_H_
#define FEDSIM_FADL_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/data.h"
#include "fedsim/federated.h"
#include "fedsim/nn.h"

namespace fedsim {

// Federated-autonomous training in two stages:
//
//  1. Federated averaging over all silos with every layer trainable
//     (`stage1`, which also supplies lr / batch size / lambda / seed /
//     threads for stage 2).
//  2. Each silo takes a copy of the stage-1 model, freezes the first layer
//     (weights and biases) and trains the remaining layers on its own
//     training split for `stage2_epochs`, with no further aggregation.
//
// Stage 2 continues each silo's epoch seed stream where stage 1 left off
// (epoch_offset = stage1.global_cycles * stage1.local_epochs).
struct FadlConfig {
  FedConfig stage1 = [] {
    FedConfig c;
    c.global_cycles = 10;
    c.local_epochs = 5;
    return c;
  }();
  std::size_t stage2_epochs = 50;

  void Validate() const { stage1.Validate(); }
};

// One specialized model per silo plus the shared stage-1 model they were
// derived from. Every per-silo model has the shared model's shape and a
// first layer bit-identical to the shared model's first layer; the
// constructor throws std::invalid_argument otherwise.
class SpecializedEnsemble {
 public:
  using SiloModelMap = std::map<std::string, Model, std::less<>>;

  SpecializedEnsemble(Model shared, SiloModelMap per_silo);

  const Model& shared_model() const { return shared_; }
  const SiloModelMap& models() const { return per_silo_; }
  std::size_t size() const { return per_silo_.size(); }
  bool Contains(std::string_view silo_id) const;

  // Throws NotFoundError for an unknown silo.
  const Model& ModelFor(std::string_view silo_id) const;

 private:
  Model shared_;
  SiloModelMap per_silo_;
};

struct FadlResult {
  SpecializedEnsemble ensemble;
  CycleTrace stage1_trace;
};

// Throws as RunFederated() does.
FadlResult RunFadl(std::span<const SiloDataset> silos, const Model& init,
                   const FadlConfig& config);

enum class UnknownSiloPolicy {
  kError,
  // Score with the shared stage-1 model.
  kFallbackToShared,
};

// Scores x with the model specialized for `silo_id`.
std::vector<double> PredictRouted(
    const SpecializedEnsemble& ensemble, std::string_view silo_id,
    const Matrix& x, UnknownSiloPolicy policy = UnknownSiloPolicy::kError);

// Directory layout:
//   ensemble.json     {"format":"fedsim-ensemble/1","stage1":"stage1.fadl",
//                      "silos":[{"id":"h001","model":"silo_0000.fadl"},...]}
//   stage1.fadl       shared stage-1 model
//   silo_NNNN.fadl    one per silo, numbered in ascending id order
// Model files use the format in model_io.h.
void SaveEnsemble(const SpecializedEnsemble& ensemble,
                  const std::filesystem::path& dir);
SpecializedEnsemble LoadEnsemble(const std::filesystem::path& dir);

}  // namespace fedsim

#endif  // FEDSIM_FADL_H_
