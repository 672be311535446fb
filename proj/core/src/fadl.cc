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

#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "fedsim/audit.h"
#include "fedsim/errors.h"
#include "fedsim/model_io.h"
#include "fedsim/parallel.h"

namespace fedsim {

SpecializedEnsemble::SpecializedEnsemble(Model shared, SiloModelMap per_silo)
    : shared_(std::move(shared)), per_silo_(std::move(per_silo)) {
  for (const auto& [id, model] : per_silo_) {
    if (!model.SameShape(shared_)) {
      throw std::invalid_argument("SpecializedEnsemble: model for " + id +
                                  " differs in shape from the shared model");
    }
    if (!BitIdentical(model.layer(0), shared_.layer(0))) {
      throw std::invalid_argument("SpecializedEnsemble: first layer of " + id +
                                  " differs from the shared model");
    }
  }
}

bool SpecializedEnsemble::Contains(std::string_view silo_id) const {
  return per_silo_.find(silo_id) != per_silo_.end();
}

const Model& SpecializedEnsemble::ModelFor(std::string_view silo_id) const {
  const auto it = per_silo_.find(silo_id);
  if (it == per_silo_.end()) {
    throw NotFoundError("no specialized model for silo " +
                        std::string(silo_id));
  }
  return it->second;
}

FadlResult RunFadl(std::span<const SiloDataset> silos, const Model& init,
                   const FadlConfig& config) {
  config.Validate();
  FederatedResult stage1 = RunFederated(silos, init, config.stage1);
  const Model& shared = stage1.model;

  std::vector<bool> freeze(shared.num_layers(), false);
  freeze[0] = true;
  const FedConfig& fc = config.stage1;

  std::vector<std::optional<Model>> specialized(silos.size());
  {
    audit::RunScope run_scope;
    ParallelFor(silos.size(), fc.num_threads, [&](std::size_t i) {
      const SiloDataset& silo = silos[i];
      audit::SiloScope silo_scope(silo.silo_id());
      const LabeledData data = silo.Select(Split::kTrain);
      TrainSpec spec;
      spec.epochs = config.stage2_epochs;
      spec.batch_size = fc.batch_size;
      spec.learning_rate = fc.learning_rate;
      spec.lambda = fc.lambda;
      spec.shuffle_seed = SiloSeed(fc.master_seed, silo.silo_id());
      spec.epoch_offset = fc.global_cycles * fc.local_epochs;
      spec.shuffle = fc.shuffle;
      spec.freeze_mask = freeze;
      specialized[i] = Train(shared, data.features, data.labels, spec);
    });
  }

  SpecializedEnsemble::SiloModelMap per_silo;
  for (std::size_t i = 0; i < silos.size(); ++i) {
    per_silo.emplace(silos[i].silo_id(), std::move(*specialized[i]));
  }
  return {SpecializedEnsemble(shared, std::move(per_silo)),
          std::move(stage1.trace)};
}

std::vector<double> PredictRouted(const SpecializedEnsemble& ensemble,
                                  std::string_view silo_id, const Matrix& x,
                                  UnknownSiloPolicy policy) {
  if (!ensemble.Contains(silo_id) &&
      policy == UnknownSiloPolicy::kFallbackToShared) {
    return Predict(ensemble.shared_model(), x);
  }
  return Predict(ensemble.ModelFor(silo_id), x);
}

namespace {
constexpr char kEnsembleFormat[] = "fedsim-ensemble/1";
constexpr char kEnsembleManifest[] = "ensemble.json";
}  // namespace

void SaveEnsemble(const SpecializedEnsemble& ensemble,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = {{"format", kEnsembleFormat},
                             {"stage1", "stage1.fadl"},
                             {"silos", nlohmann::json::array()}};
  SaveModel(ensemble.shared_model(), dir / "stage1.fadl");
  std::size_t index = 0;
  for (const auto& [id, model] : ensemble.models()) {
    char name[32];
    std::snprintf(name, sizeof(name), "silo_%04zu.fadl", index++);
    SaveModel(model, dir / name);
    manifest["silos"].push_back({{"id", id}, {"model", name}});
  }
  std::ofstream out(dir / kEnsembleManifest, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " +
                             (dir / kEnsembleManifest).string());
  }
  out << manifest.dump(2) << '\n';
}

SpecializedEnsemble LoadEnsemble(const std::filesystem::path& dir) {
  std::ifstream in(dir / kEnsembleManifest);
  if (!in) {
    throw ParseError("cannot open " + (dir / kEnsembleManifest).string(), 0);
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    if (manifest.at("format").get<std::string>() != kEnsembleFormat) {
      throw ParseError("unsupported ensemble format", 0);
    }
    Model shared = LoadModel(dir / manifest.at("stage1").get<std::string>());
    SpecializedEnsemble::SiloModelMap per_silo;
    for (const auto& entry : manifest.at("silos")) {
      per_silo.emplace(entry.at("id").get<std::string>(),
                       LoadModel(dir / entry.at("model").get<std::string>()));
    }
    return SpecializedEnsemble(std::move(shared), std::move(per_silo));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad ensemble manifest: ") + e.what(), 0);
  }
}

}  // namespace fedsim
