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

#ifndef FEDSIM_TRAINING_H_
#define FEDSIM_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/data.h"
#include "fedsim/matrix.h"
#include "fedsim/nn.h"

namespace fedsim {

// Plain minibatch SGD settings for one local training call.
//
// Epoch e of a call (0-based) is shuffled by a Fisher-Yates pass seeded with
// EpochSeed(shuffle_seed, epoch_offset + e), starting from the identity
// order. A run split into several calls with consecutive epoch_offset values
// therefore sees exactly the same batches as one long call.
struct TrainSpec {
  std::size_t epochs = 1;
  std::size_t batch_size = 100;
  double learning_rate = 0.01;
  double lambda = 0.01;
  uint64_t shuffle_seed = 0;
  std::size_t epoch_offset = 0;
  // false: every epoch visits samples in stored order.
  bool shuffle = true;
  // Empty, or one entry per layer; true keeps that layer's weights and
  // biases bit-identical.
  std::vector<bool> freeze_mask;
};

uint64_t EpochSeed(uint64_t shuffle_seed, std::size_t epoch_index);

struct TrainStats {
  std::size_t steps = 0;
  // Sample-weighted mean of the minibatch losses seen during the last epoch
  // (loss evaluated before each step). NaN when no epoch ran.
  double last_epoch_loss = 0.0;
};

// Returns the model after spec.epochs passes over (x, labels). The final
// partial batch is kept and averaged over its own size. Throws
// std::invalid_argument on an empty dataset, batch_size 0, a non-positive
// learning rate, negative lambda, a bad freeze mask or mismatched labels;
// ShapeError if x does not fit the model.
Model Train(const Model& model, const Matrix& x,
            std::span<const uint8_t> labels, const TrainSpec& spec,
            TrainStats* stats = nullptr);
Model Train(const Model& model, const BinaryFeatures& x,
            std::span<const uint8_t> labels, const TrainSpec& spec,
            TrainStats* stats = nullptr);

// Pools the training splits of all silos, concatenated in ascending silo id
// order whatever the input order, and trains on the result. This is the
// non-federated upper-bound regime.
Model TrainCentralized(std::span<const SiloDataset> silos, const Model& init,
                       const TrainSpec& spec, TrainStats* stats = nullptr);

}  // namespace fedsim

#endif  // FEDSIM_TRAINING_H_
