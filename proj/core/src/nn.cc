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

#include "fedsim/nn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "fedsim/errors.h"
#include "fedsim/rng.h"

namespace fedsim {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstRowVec = Eigen::Map<const Eigen::RowVectorXd>;
using MutRowVec = Eigen::Map<Eigen::RowVectorXd>;

ConstMap View(const Matrix& m) { return ConstMap(m.values().data(), m.rows(), m.cols()); }
MutMap View(Matrix& m) {
  return MutMap(m.mutable_values().data(), m.rows(), m.cols());
}

std::string Dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

// out = x * w + b, skipping zero entries of x. Used for the first layer,
// whose input is a mostly-zero indicator matrix.
void SparseInputAffine(const Matrix& x, const LayerParams& layer, Matrix& out) {
  const ConstMap w = View(layer.weights);
  const ConstRowVec b(layer.biases.data(), layer.out_dim());
  MutMap z = View(out);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    z.row(i) = b;
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < xi.size(); ++j) {
      const double v = xi[j];
      if (v == 0.0) continue;
      if (v == 1.0) {
        z.row(i) += w.row(j);
      } else {
        z.row(i) += v * w.row(j);
      }
    }
  }
}

// grad_w += x^T * dz, skipping zero entries of x.
void SparseInputWeightGrad(const Matrix& x, const Matrix& dz, Matrix& grad_w) {
  const ConstMap d = View(dz);
  MutMap g = View(grad_w);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < xi.size(); ++j) {
      const double v = xi[j];
      if (v == 0.0) continue;
      if (v == 1.0) {
        g.row(j) += d.row(i);
      } else {
        g.row(j) += v * d.row(i);
      }
    }
  }
}

void CheckLabels(std::span<const uint8_t> labels) {
  for (uint8_t y : labels) {
    if (y > 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

bool SameBits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

Model::Model(std::vector<LayerParams> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("Model: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerParams& l = layers_[i];
    if (l.in_dim() == 0 || l.out_dim() == 0) {
      throw ShapeError("Model: layer " + std::to_string(i) + " has zero dim");
    }
    if (l.biases.size() != l.out_dim()) {
      throw ShapeError("Model: layer " + std::to_string(i) + " has " +
                       std::to_string(l.biases.size()) + " biases for " +
                       std::to_string(l.out_dim()) + " outputs");
    }
    if (i > 0 && l.in_dim() != layers_[i - 1].out_dim()) {
      throw ShapeError("Model: layer " + std::to_string(i) + " input " +
                       std::to_string(l.in_dim()) + " != previous output " +
                       std::to_string(layers_[i - 1].out_dim()));
    }
    const bool last = i + 1 == layers_.size();
    const Activation want = last ? Activation::kSigmoid : Activation::kRelu;
    if (l.activation != want) {
      throw ShapeError(last ? "Model: output layer must be sigmoid"
                            : "Model: hidden layers must be relu");
    }
  }
  if (layers_.back().out_dim() != 1) {
    throw ShapeError("Model: output layer must have exactly one unit");
  }
}

std::vector<std::size_t> Model::LayerDims() const {
  std::vector<std::size_t> dims{input_dim()};
  for (const auto& l : layers_) dims.push_back(l.out_dim());
  return dims;
}

std::size_t Model::NumParameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

bool Model::SameShape(const Model& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].weights.SameShape(other.layers_[i].weights) ||
        layers_[i].activation != other.layers_[i].activation) {
      return false;
    }
  }
  return true;
}

bool BitIdentical(const LayerParams& a, const LayerParams& b) {
  return a.activation == b.activation && a.weights.SameShape(b.weights) &&
         SameBits(a.weights.values(), b.weights.values()) &&
         SameBits(a.biases, b.biases);
}

bool BitIdentical(const Model& a, const Model& b) {
  if (a.num_layers() != b.num_layers()) return false;
  for (std::size_t i = 0; i < a.num_layers(); ++i) {
    if (!BitIdentical(a.layer(i), b.layer(i))) return false;
  }
  return true;
}

Model InitModel(std::span<const std::size_t> layer_dims, uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("InitModel: need at least two layer dims");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw std::invalid_argument("InitModel: zero layer dim");
  }
  Rng rng(seed);
  std::vector<LayerParams> layers;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const std::size_t in = layer_dims[i];
    const std::size_t out = layer_dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(in, out);
    for (double& v : w.mutable_values()) v = rng.Uniform(-limit, limit);
    const bool last = i + 2 == layer_dims.size();
    layers.push_back({std::move(w), std::vector<double>(out, 0.0),
                      last ? Activation::kSigmoid : Activation::kRelu});
  }
  return Model(std::move(layers));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ForwardResult Forward(const Model& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("Forward: input is " + Dims(x.rows(), x.cols()) +
                     ", model expects " + std::to_string(model.input_dim()) +
                     " columns");
  }
  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.input = x;
  const std::size_t batch = x.rows();
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const LayerParams& layer = model.layer(l);
    Matrix z(batch, layer.out_dim());
    if (l == 0) {
      SparseInputAffine(x, layer, z);
    } else {
      MutMap zm = View(z);
      zm.noalias() = View(cache.activations[l - 1]) * View(layer.weights);
      zm.rowwise() += ConstRowVec(layer.biases.data(), layer.out_dim());
    }
    Matrix a = z;
    if (layer.activation == Activation::kRelu) {
      for (double& v : a.mutable_values()) v = v > 0.0 ? v : 0.0;
    } else {
      for (double& v : a.mutable_values()) v = Sigmoid(v);
    }
    cache.pre_activations.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
  }
  const auto out = cache.activations.back().values();
  result.probs.assign(out.begin(), out.end());
  return result;
}

std::vector<double> Predict(const Model& model, const Matrix& x) {
  return Forward(model, x).probs;
}

double Loss(std::span<const double> probs, std::span<const uint8_t> labels,
            const Model& model, double lambda) {
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("Loss: " + std::to_string(probs.size()) +
                                " probs vs " + std::to_string(labels.size()) +
                                " labels");
  }
  if (lambda < 0.0) throw std::invalid_argument("Loss: negative lambda");
  CheckLabels(labels);
  double data = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p =
        std::clamp(probs[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    data -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  if (!probs.empty()) data /= static_cast<double>(probs.size());
  double penalty = 0.0;
  if (lambda > 0.0) {
    for (const auto& l : model.layers()) {
      for (double w : l.weights.values()) penalty += w * w;
    }
  }
  return data + lambda * penalty;
}

Gradients Backward(const Model& model, const ForwardCache& cache,
                   std::span<const uint8_t> labels, double lambda) {
  return BackwardFrom(model, cache, labels, lambda, 0);
}

Gradients BackwardFrom(const Model& model, const ForwardCache& cache,
                       std::span<const uint8_t> labels, double lambda,
                       std::size_t first_layer) {
  const std::size_t n_layers = model.num_layers();
  const std::size_t batch = cache.batch_size();
  if (cache.input.cols() != model.input_dim() ||
      cache.pre_activations.size() != n_layers ||
      cache.activations.size() != n_layers) {
    throw ShapeError("Backward: cache does not match model");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t out = model.layer(l).out_dim();
    if (cache.pre_activations[l].rows() != batch ||
        cache.pre_activations[l].cols() != out ||
        cache.activations[l].rows() != batch ||
        cache.activations[l].cols() != out) {
      throw ShapeError("Backward: stale cache at layer " + std::to_string(l));
    }
  }
  if (labels.size() != batch) {
    throw std::invalid_argument("Backward: " + std::to_string(labels.size()) +
                                " labels for batch of " +
                                std::to_string(batch));
  }
  if (batch == 0) throw std::invalid_argument("Backward: empty batch");
  if (first_layer >= n_layers) {
    throw std::invalid_argument("Backward: first_layer out of range");
  }
  CheckLabels(labels);

  Gradients grads;
  grads.layers.resize(n_layers);

  // d(mean CE)/d(output pre-activation) = (p - y) / batch.
  Matrix dz(batch, 1);
  const auto probs = cache.activations.back().values();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    dz(i, 0) = (probs[i] - static_cast<double>(labels[i])) * inv_batch;
  }

  for (std::size_t l = n_layers; l-- > first_layer;) {
    const LayerParams& layer = model.layer(l);
    LayerGradients& g = grads.layers[l];
    g.weights = Matrix(layer.in_dim(), layer.out_dim());
    if (l == 0) {
      SparseInputWeightGrad(cache.input, dz, g.weights);
    } else {
      View(g.weights).noalias() =
          View(cache.activations[l - 1]).transpose() * View(dz);
    }
    if (lambda != 0.0) {
      View(g.weights) += (2.0 * lambda) * View(layer.weights);
    }
    g.biases.assign(layer.out_dim(), 0.0);
    MutRowVec(g.biases.data(), layer.out_dim()) = View(dz).colwise().sum();

    if (l == first_layer) break;
    Matrix prev(batch, layer.in_dim());
    View(prev).noalias() = View(dz) * View(layer.weights).transpose();
    const auto z_prev = cache.pre_activations[l - 1].values();
    auto dp = prev.mutable_values();
    for (std::size_t k = 0; k < dp.size(); ++k) {
      if (!(z_prev[k] > 0.0)) dp[k] = 0.0;
    }
    dz = std::move(prev);
  }
  return grads;
}

Model AxpyModel(std::span<const Model> models,
                std::span<const double> coefficients) {
  if (models.empty()) throw std::invalid_argument("AxpyModel: no models");
  if (models.size() != coefficients.size()) {
    throw std::invalid_argument("AxpyModel: " + std::to_string(models.size()) +
                                " models vs " +
                                std::to_string(coefficients.size()) +
                                " coefficients");
  }
  for (const Model& m : models) {
    if (!m.SameShape(models[0])) {
      throw ShapeError("AxpyModel: models differ in shape");
    }
  }
  Model result = models[0];
  for (std::size_t l = 0; l < result.num_layers(); ++l) {
    auto w = result.mutable_weights(l);
    auto b = result.mutable_biases(l);
    const double c0 = coefficients[0];
    for (double& v : w) v *= c0;
    for (double& v : b) v *= c0;
    for (std::size_t m = 1; m < models.size(); ++m) {
      const double c = coefficients[m];
      const auto src_w = models[m].layer(l).weights.values();
      const auto& src_b = models[m].layer(l).biases;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += c * src_w[k];
      for (std::size_t k = 0; k < b.size(); ++k) b[k] += c * src_b[k];
    }
  }
  return result;
}

void ApplySgdStep(Model& model, const Gradients& grads, double learning_rate,
                  const std::vector<bool>& frozen) {
  if (grads.layers.size() != model.num_layers()) {
    throw ShapeError("ApplySgdStep: gradient layer count mismatch");
  }
  if (!frozen.empty() && frozen.size() != model.num_layers()) {
    throw std::invalid_argument("ApplySgdStep: freeze mask length mismatch");
  }
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (!frozen.empty() && frozen[l]) continue;
    const LayerGradients& g = grads.layers[l];
    auto w = model.mutable_weights(l);
    auto b = model.mutable_biases(l);
    if (g.weights.size() != w.size() || g.biases.size() != b.size()) {
      throw ShapeError("ApplySgdStep: missing or mis-shaped gradient for "
                       "trainable layer " + std::to_string(l));
    }
    const auto gw = g.weights.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= learning_rate * gw[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= learning_rate * g.biases[k];
  }
}

}  // namespace fedsim
