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

#ifndef FEDSIM_FEDERATED_H_
#define FEDSIM_FEDERATED_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/data.h"
#include "fedsim/nn.h"
#include "fedsim/training.h"

namespace fedsim {

enum class AggregationWeighting {
  // n_i = number of training-split samples in silo i.
  kByTrainCount,
};

struct FedConfig {
  std::size_t global_cycles = 20;
  std::size_t local_epochs = 5;
  std::size_t batch_size = 100;
  double learning_rate = 0.01;
  double lambda = 0.01;
  uint64_t master_seed = 0;
  bool shuffle = true;
  AggregationWeighting weighting = AggregationWeighting::kByTrainCount;
  // Silos trained concurrently within a cycle. Does not affect results.
  std::size_t num_threads = 1;

  // Throws std::invalid_argument unless global_cycles >= 1 and
  // local_epochs >= 1.
  void Validate() const;
};

// Seed derivation shared by every regime. Silo `id` trains on the epoch
// stream EpochSeed(SiloSeed(master, id), k), k = 0, 1, 2, ..., where k counts
// that silo's local epochs across the whole run: cycle t (1-based) of
// federated training covers k in [(t - 1) * E, t * E). With one silo this
// makes T cycles of E epochs see exactly the batches of one T * E epoch
// Train() call seeded with SiloSeed(master, id).
uint64_t SiloSeed(uint64_t master_seed, std::string_view silo_id);

// TrainSpec for silo `silo_id` in global cycle `cycle` (1-based).
TrainSpec LocalTrainSpec(const FedConfig& config, std::string_view silo_id,
                         std::size_t cycle);

// n_i / N for each count. Throws std::invalid_argument on an empty list, a
// zero count or a zero total.
std::vector<double> AggregationCoefficients(std::span<const std::size_t> counts);

// Sample-size-weighted parameter average, sum_i (n_i / N) * W_i.
//
// Accumulated as W_0 + sum_{i>0} (n_i / N) * (W_i - W_0), which equals the
// weighted mean but makes a single model, or a list of identical models,
// reproduce W_0 exactly. Models are combined in list order.
Model Aggregate(std::span<const Model> models,
                std::span<const std::size_t> counts);

// Aggregate() after sorting the (id, model, count) triples by silo id, so the
// result does not depend on the order the caller collected them in.
Model AggregateBySiloId(std::span<const std::string> silo_ids,
                        std::span<const Model> models,
                        std::span<const std::size_t> counts);

struct CycleRecord {
  std::size_t cycle = 0;  // 1-based
  // (silo id, mean training loss of that silo's last local epoch), ascending
  // silo id.
  std::vector<std::pair<std::string, double>> silo_losses;
  // ModelChecksum() of the aggregated model; identifies the snapshot.
  uint64_t checksum = 0;
};

struct CycleTrace {
  std::vector<CycleRecord> cycles;
};

struct FederatedResult {
  Model model;
  CycleTrace trace;
};

// Broadcast / local train / aggregate, config.global_cycles times. Silos are
// processed in ascending id order and each silo's training runs inside an
// audit::SiloScope for that silo; the whole call is an audit::RunScope.
// Throws std::invalid_argument for no silos, duplicate ids, a silo with no
// training samples, or a bad config; ShapeError if the silos' feature_dim
// does not match init.
FederatedResult RunFederated(std::span<const SiloDataset> silos,
                             const Model& init, const FedConfig& config);

// One JSON object per line:
//   {"checksum":"<16 hex>","cycle":1,"silo_loss":{"h001":0.21,...}}
void WriteTraceJsonl(const CycleTrace& trace, std::ostream& out);

}  // namespace fedsim

#endif  // FEDSIM_FEDERATED_H_
