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

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "fedsim/audit.h"
#include "fedsim/errors.h"
#include "fedsim/model_io.h"
#include "fedsim/parallel.h"
#include "fedsim/rng.h"

namespace fedsim {

void FedConfig::Validate() const {
  if (global_cycles < 1) {
    throw std::invalid_argument("FedConfig: global_cycles must be >= 1");
  }
  if (local_epochs < 1) {
    throw std::invalid_argument("FedConfig: local_epochs must be >= 1");
  }
}

uint64_t SiloSeed(uint64_t master_seed, std::string_view silo_id) {
  return DeriveSeed(master_seed, HashString(silo_id));
}

TrainSpec LocalTrainSpec(const FedConfig& config, std::string_view silo_id,
                         std::size_t cycle) {
  if (cycle < 1) throw std::invalid_argument("LocalTrainSpec: cycle is 1-based");
  TrainSpec spec;
  spec.epochs = config.local_epochs;
  spec.batch_size = config.batch_size;
  spec.learning_rate = config.learning_rate;
  spec.lambda = config.lambda;
  spec.shuffle_seed = SiloSeed(config.master_seed, silo_id);
  spec.epoch_offset = (cycle - 1) * config.local_epochs;
  spec.shuffle = config.shuffle;
  return spec;
}

std::vector<double> AggregationCoefficients(
    std::span<const std::size_t> counts) {
  if (counts.empty()) {
    throw std::invalid_argument("AggregationCoefficients: no counts");
  }
  std::size_t total = 0;
  for (std::size_t n : counts) {
    if (n == 0) {
      throw std::invalid_argument("AggregationCoefficients: zero sample count");
    }
    total += n;
  }
  std::vector<double> c;
  c.reserve(counts.size());
  for (std::size_t n : counts) {
    c.push_back(static_cast<double>(n) / static_cast<double>(total));
  }
  return c;
}

Model Aggregate(std::span<const Model> models,
                std::span<const std::size_t> counts) {
  if (models.size() != counts.size()) {
    throw std::invalid_argument("Aggregate: " + std::to_string(models.size()) +
                                " models vs " + std::to_string(counts.size()) +
                                " counts");
  }
  const std::vector<double> coef = AggregationCoefficients(counts);
  for (const Model& m : models) {
    if (!m.SameShape(models[0])) {
      throw ShapeError("Aggregate: models differ in shape");
    }
  }
  Model result = models[0];
  for (std::size_t l = 0; l < result.num_layers(); ++l) {
    auto w = result.mutable_weights(l);
    auto b = result.mutable_biases(l);
    const auto anchor_w = models[0].layer(l).weights.values();
    const auto& anchor_b = models[0].layer(l).biases;
    for (std::size_t m = 1; m < models.size(); ++m) {
      const double c = coef[m];
      const auto src_w = models[m].layer(l).weights.values();
      const auto& src_b = models[m].layer(l).biases;
      for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] += c * (src_w[k] - anchor_w[k]);
      }
      for (std::size_t k = 0; k < b.size(); ++k) {
        b[k] += c * (src_b[k] - anchor_b[k]);
      }
    }
  }
  return result;
}

Model AggregateBySiloId(std::span<const std::string> silo_ids,
                        std::span<const Model> models,
                        std::span<const std::size_t> counts) {
  if (silo_ids.size() != models.size() || models.size() != counts.size()) {
    throw std::invalid_argument("AggregateBySiloId: length mismatch");
  }
  std::vector<std::size_t> order(silo_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return silo_ids[a] < silo_ids[b];
  });
  std::vector<Model> sorted_models;
  std::vector<std::size_t> sorted_counts;
  sorted_models.reserve(order.size());
  for (std::size_t i : order) {
    sorted_models.push_back(models[i]);
    sorted_counts.push_back(counts[i]);
  }
  return Aggregate(sorted_models, sorted_counts);
}

FederatedResult RunFederated(std::span<const SiloDataset> silos,
                             const Model& init, const FedConfig& config) {
  config.Validate();
  if (silos.empty()) throw std::invalid_argument("RunFederated: no silos");

  std::vector<const SiloDataset*> ordered;
  std::set<std::string> seen;
  for (const SiloDataset& s : silos) {
    if (!seen.insert(s.silo_id()).second) {
      throw std::invalid_argument("RunFederated: duplicate silo id " +
                                  s.silo_id());
    }
    if (s.feature_dim() != init.input_dim()) {
      throw ShapeError("RunFederated: silo " + s.silo_id() + " has " +
                       std::to_string(s.feature_dim()) +
                       " features, model expects " +
                       std::to_string(init.input_dim()));
    }
    if (s.CountInSplit(Split::kTrain) == 0) {
      throw std::invalid_argument("RunFederated: silo " + s.silo_id() +
                                  " has no training samples");
    }
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const SiloDataset* a, const SiloDataset* b) {
              return a->silo_id() < b->silo_id();
            });

  const std::size_t k = ordered.size();
  std::vector<std::size_t> counts(k);
  for (std::size_t i = 0; i < k; ++i) {
    counts[i] = ordered[i]->CountInSplit(Split::kTrain);
  }

  audit::RunScope run_scope;
  Model global = init;
  CycleTrace trace;
  for (std::size_t cycle = 1; cycle <= config.global_cycles; ++cycle) {
    std::vector<std::optional<Model>> local(k);
    std::vector<double> losses(k);
    ParallelFor(k, config.num_threads, [&](std::size_t i) {
      const SiloDataset& silo = *ordered[i];
      audit::SiloScope silo_scope(silo.silo_id());
      const LabeledData data = silo.Select(Split::kTrain);
      TrainStats stats;
      local[i] = Train(global, data.features, data.labels,
                       LocalTrainSpec(config, silo.silo_id(), cycle), &stats);
      losses[i] = stats.last_epoch_loss;
    });

    std::vector<Model> models;
    models.reserve(k);
    for (auto& m : local) models.push_back(std::move(*m));
    global = Aggregate(models, counts);

    CycleRecord record;
    record.cycle = cycle;
    for (std::size_t i = 0; i < k; ++i) {
      record.silo_losses.emplace_back(ordered[i]->silo_id(), losses[i]);
    }
    record.checksum = ModelChecksum(global);
    trace.cycles.push_back(std::move(record));
  }
  return {std::move(global), std::move(trace)};
}

void WriteTraceJsonl(const CycleTrace& trace, std::ostream& out) {
  for (const CycleRecord& r : trace.cycles) {
    nlohmann::json losses = nlohmann::json::object();
    for (const auto& [id, loss] : r.silo_losses) losses[id] = loss;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(r.checksum));
    const nlohmann::json line = {
        {"cycle", r.cycle}, {"silo_loss", losses}, {"checksum", hex}};
    out << line.dump() << '\n';
  }
}

}  // namespace fedsim
