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

#ifndef FEDSIM_NN_H_
#define FEDSIM_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/matrix.h"

namespace fedsim {

enum class Activation : uint8_t { kRelu = 0, kSigmoid = 1 };

// One dense layer: out = activation(in * weights + biases).
// weights is in_dim x out_dim.
struct LayerParams {
  Matrix weights;
  std::vector<double> biases;
  Activation activation = Activation::kRelu;

  std::size_t in_dim() const { return weights.rows(); }
  std::size_t out_dim() const { return weights.cols(); }
};

// Feed-forward binary classifier: ReLU hidden layers and a single sigmoid
// output unit. The constructor enforces that shape; an instance is always a
// valid network.
class Model {
 public:
  // Throws ShapeError if the layers do not chain, the last layer does not
  // have exactly one sigmoid output, or a hidden layer is not ReLU.
  explicit Model(std::vector<LayerParams> layers);

  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<LayerParams>& layers() const { return layers_; }
  const LayerParams& layer(std::size_t i) const { return layers_[i]; }

  // Parameter values may be edited in place; shapes may not.
  std::span<double> mutable_weights(std::size_t i) {
    return layers_[i].weights.mutable_values();
  }
  std::span<double> mutable_biases(std::size_t i) { return layers_[i].biases; }

  // [input_dim, out_dim(0), out_dim(1), ..., 1]
  std::vector<std::size_t> LayerDims() const;
  std::size_t NumParameters() const;

  bool SameShape(const Model& other) const;

 private:
  std::vector<LayerParams> layers_;
};

// True iff shapes, activations and every parameter's bit pattern agree.
bool BitIdentical(const LayerParams& a, const LayerParams& b);
bool BitIdentical(const Model& a, const Model& b);

struct LayerGradients {
  Matrix weights;
  std::vector<double> biases;
};

// Mirror of a Model's parameters holding d(loss)/d(parameter).
struct Gradients {
  std::vector<LayerGradients> layers;
};

// Activations of one forward pass, kept for backpropagation.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> activations;

  std::size_t batch_size() const { return input.rows(); }
};

struct ForwardResult {
  std::vector<double> probs;
  ForwardCache cache;
};

// Glorot-uniform weights, zero biases. layer_dims = [input, hidden..., 1].
// Identical (layer_dims, seed) give bit-identical models.
// Throws std::invalid_argument for fewer than two dims or a zero dim, and
// ShapeError if the last dim is not 1.
Model InitModel(std::span<const std::size_t> layer_dims, uint64_t seed);

// Throws ShapeError if x.cols() != model.input_dim().
ForwardResult Forward(const Model& model, const Matrix& x);

// Forward() without keeping the cache.
std::vector<double> Predict(const Model& model, const Matrix& x);

double Sigmoid(double z);

inline constexpr double kProbabilityClamp = 1e-12;

// Mean binary cross-entropy over the batch plus lambda * (sum of squared
// weights over all layers). Biases are not penalized. Probabilities are
// clamped to [1e-12, 1 - 1e-12] before the log.
double Loss(std::span<const double> probs, std::span<const uint8_t> labels,
            const Model& model, double lambda);

// Exact gradient of Loss() at the cached forward pass. Throws
// std::invalid_argument (ShapeError) if the cache or labels do not match the
// model.
Gradients Backward(const Model& model, const ForwardCache& cache,
                   std::span<const uint8_t> labels, double lambda);

// Gradients for layers [first_layer, num_layers) only; entries below
// first_layer are left empty and the backward pass stops there. Used by
// training when leading layers are frozen.
Gradients BackwardFrom(const Model& model, const ForwardCache& cache,
                       std::span<const uint8_t> labels, double lambda,
                       std::size_t first_layer);

// Parameter-wise sum_i coefficients[i] * models[i], accumulated in list
// order. Throws std::invalid_argument on empty input, length mismatch or
// differing shapes.
Model AxpyModel(std::span<const Model> models,
                std::span<const double> coefficients);

// params -= learning_rate * grads for every layer whose `frozen` entry is
// false. An empty `frozen` mask means nothing is frozen.
void ApplySgdStep(Model& model, const Gradients& grads, double learning_rate,
                  const std::vector<bool>& frozen = {});

}  // namespace fedsim

#endif  // FEDSIM_NN_H_
