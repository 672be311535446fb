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
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedsim/errors.h"
#include "fedsim/rng.h"

namespace fedsim {
namespace {

void ValidateSpec(const Model& model, std::size_t rows, std::size_t cols,
                  std::size_t n_labels, const TrainSpec& spec) {
  if (rows == 0) throw std::invalid_argument("Train: empty dataset");
  if (n_labels != rows) {
    throw std::invalid_argument("Train: " + std::to_string(n_labels) +
                                " labels for " + std::to_string(rows) +
                                " samples");
  }
  if (cols != model.input_dim()) {
    throw ShapeError("Train: data has " + std::to_string(cols) +
                     " features, model expects " +
                     std::to_string(model.input_dim()));
  }
  if (spec.batch_size == 0) throw std::invalid_argument("Train: batch_size 0");
  if (!(spec.learning_rate > 0.0) || !std::isfinite(spec.learning_rate)) {
    throw std::invalid_argument("Train: learning_rate must be > 0");
  }
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) {
    throw std::invalid_argument("Train: lambda must be >= 0");
  }
  if (!spec.freeze_mask.empty() &&
      spec.freeze_mask.size() != model.num_layers()) {
    throw std::invalid_argument("Train: freeze_mask has " +
                                std::to_string(spec.freeze_mask.size()) +
                                " entries for " +
                                std::to_string(model.num_layers()) +
                                " layers");
  }
}

template <typename Features>
Model TrainImpl(const Model& model, const Features& x,
                std::span<const uint8_t> labels, const TrainSpec& spec,
                TrainStats* stats) {
  ValidateSpec(model, x.rows(), x.cols(), labels.size(), spec);
  for (uint8_t y : labels) {
    if (y > 1) throw std::invalid_argument("Train: labels must be 0 or 1");
  }
  if (stats) *stats = {0, std::numeric_limits<double>::quiet_NaN()};

  std::size_t first_trainable = 0;
  if (!spec.freeze_mask.empty()) {
    while (first_trainable < model.num_layers() &&
           spec.freeze_mask[first_trainable]) {
      ++first_trainable;
    }
  }
  Model current = model;
  if (spec.epochs == 0 || first_trainable == model.num_layers()) return current;

  std::vector<bool> frozen = spec.freeze_mask;
  if (frozen.empty()) frozen.assign(current.num_layers(), false);

  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::vector<uint8_t> batch_labels;
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (spec.shuffle) {
      Rng rng(EpochSeed(spec.shuffle_seed, spec.epoch_offset + e));
      Shuffle(order, rng);
    }
    const bool last_epoch = e + 1 == spec.epochs;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += spec.batch_size) {
      const std::size_t end = std::min(n, start + spec.batch_size);
      const std::span<const std::size_t> rows(order.data() + start,
                                              end - start);
      const Matrix xb = x.GatherRows(rows);
      batch_labels.clear();
      for (std::size_t r : rows) batch_labels.push_back(labels[r]);

      ForwardResult fwd = Forward(current, xb);
      if (stats && last_epoch) {
        // Data term only; the penalty is added once at the end.
        loss_sum += Loss(fwd.probs, batch_labels, current, 0.0) *
                    static_cast<double>(rows.size());
      }
      const Gradients grads = BackwardFrom(current, fwd.cache, batch_labels,
                                           spec.lambda, first_trainable);
      ApplySgdStep(current, grads, spec.learning_rate, frozen);
      if (stats) ++stats->steps;
    }
    if (stats && last_epoch) {
      double penalty = 0.0;
      for (const auto& l : current.layers()) {
        for (double w : l.weights.values()) penalty += w * w;
      }
      stats->last_epoch_loss =
          loss_sum / static_cast<double>(n) + spec.lambda * penalty;
    }
  }
  return current;
}

}  // namespace

uint64_t EpochSeed(uint64_t shuffle_seed, std::size_t epoch_index) {
  return DeriveSeed(shuffle_seed, epoch_index);
}

Model Train(const Model& model, const Matrix& x,
            std::span<const uint8_t> labels, const TrainSpec& spec,
            TrainStats* stats) {
  return TrainImpl(model, x, labels, spec, stats);
}

Model Train(const Model& model, const BinaryFeatures& x,
            std::span<const uint8_t> labels, const TrainSpec& spec,
            TrainStats* stats) {
  return TrainImpl(model, x, labels, spec, stats);
}

Model TrainCentralized(std::span<const SiloDataset> silos, const Model& init,
                       const TrainSpec& spec, TrainStats* stats) {
  if (silos.empty()) {
    throw std::invalid_argument("TrainCentralized: no silos");
  }
  std::vector<const SiloDataset*> ordered;
  for (const auto& s : silos) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const SiloDataset* a, const SiloDataset* b) {
              return a->silo_id() < b->silo_id();
            });
  BinaryFeatures pooled(ordered.front()->feature_dim());
  std::vector<uint8_t> labels;
  for (const SiloDataset* s : ordered) {
    if (s->feature_dim() != pooled.cols()) {
      throw ShapeError("TrainCentralized: silos differ in feature_dim");
    }
    LabeledData part = s->Select(Split::kTrain);
    pooled.Append(part.features);
    labels.insert(labels.end(), part.labels.begin(), part.labels.end());
  }
  return Train(init, pooled, labels, spec, stats);
}

}  // namespace fedsim
