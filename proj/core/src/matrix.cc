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

#include "fedsim/matrix.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace fedsim {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: " + std::to_string(values_.size()) +
                                " values for a " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " matrix");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("Matrix: non-finite value");
    }
  }
}

Matrix Matrix::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) {
      throw std::invalid_argument("Matrix::FromRows: ragged rows");
    }
    values.insert(values.end(), r.begin(), r.end());
  }
  return Matrix(n, m, std::move(values));
}

Matrix Matrix::GatherRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw std::out_of_range("Matrix::GatherRows: row index out of range");
    }
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.mutable_row(i).begin());
  }
  return out;
}

BinaryFeatures BinaryFeatures::FromDense(const Matrix& dense) {
  BinaryFeatures out(dense.cols());
  std::vector<uint32_t> active;
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    active.clear();
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      const double v = dense(r, c);
      if (v == 1.0) {
        active.push_back(static_cast<uint32_t>(c));
      } else if (v != 0.0) {
        throw std::invalid_argument("BinaryFeatures: entry is not 0 or 1");
      }
    }
    out.AppendRow(active);
  }
  return out;
}

void BinaryFeatures::AppendRow(std::span<const uint32_t> active) {
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] >= cols_) {
      throw std::invalid_argument("BinaryFeatures: index " +
                                  std::to_string(active[i]) +
                                  " out of range for " +
                                  std::to_string(cols_) + " columns");
    }
    if (i > 0 && active[i] <= active[i - 1]) {
      throw std::invalid_argument(
          "BinaryFeatures: indices must be strictly increasing");
    }
  }
  indices_.insert(indices_.end(), active.begin(), active.end());
  row_offsets_.push_back(indices_.size());
}

Matrix BinaryFeatures::ToDense() const {
  Matrix out(rows(), cols_);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (uint32_t c : row(r)) out(r, c) = 1.0;
  }
  return out;
}

Matrix BinaryFeatures::GatherRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows()) {
      throw std::out_of_range(
          "BinaryFeatures::GatherRows: row index out of range");
    }
    for (uint32_t c : row(indices[i])) out(i, c) = 1.0;
  }
  return out;
}

BinaryFeatures BinaryFeatures::SelectRows(
    std::span<const std::size_t> indices) const {
  BinaryFeatures out(cols_);
  for (std::size_t idx : indices) {
    if (idx >= rows()) {
      throw std::out_of_range(
          "BinaryFeatures::SelectRows: row index out of range");
    }
    out.AppendRow(row(idx));
  }
  return out;
}

void BinaryFeatures::Append(const BinaryFeatures& other) {
  if (other.cols_ != cols_) {
    throw std::invalid_argument("BinaryFeatures::Append: column mismatch");
  }
  const std::size_t base = indices_.size();
  indices_.insert(indices_.end(), other.indices_.begin(), other.indices_.end());
  for (std::size_t r = 1; r < other.row_offsets_.size(); ++r) {
    row_offsets_.push_back(base + other.row_offsets_[r]);
  }
}

}  // namespace fedsim
