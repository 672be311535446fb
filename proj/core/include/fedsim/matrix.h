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

#ifndef FEDSIM_MATRIX_H_
#define FEDSIM_MATRIX_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedsim {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws std::invalid_argument if values.size() != rows * cols or any value
  // is not finite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  // Matrix::FromRows({{1, 2}, {3, 4}}). All rows must have equal length.
  static Matrix FromRows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> mutable_row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }

  bool SameShape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  // Rows selected by index, in the given order.
  Matrix GatherRows(std::span<const std::size_t> indices) const;

  // Numeric equality (so 0.0 == -0.0). See BitIdentical() in nn.h for the
  // stricter comparison.
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Sparse {0,1} matrix stored as sorted column indices of the ones in each
// row (CSR without a value array). Medication indicators are mostly zero, so
// this is how silo features are held; minibatches are densified on demand.
class BinaryFeatures {
 public:
  BinaryFeatures() : row_offsets_{0} {}
  explicit BinaryFeatures(std::size_t cols) : cols_(cols), row_offsets_{0} {}

  // Throws std::invalid_argument unless every entry is exactly 0 or 1.
  static BinaryFeatures FromDense(const Matrix& dense);

  // Appends a row given the indices of its ones. Indices must be strictly
  // increasing and < cols(); throws std::invalid_argument otherwise.
  void AppendRow(std::span<const uint32_t> active);

  std::size_t rows() const { return row_offsets_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return indices_.size(); }

  std::span<const uint32_t> row(std::size_t r) const {
    return {indices_.data() + row_offsets_[r],
            row_offsets_[r + 1] - row_offsets_[r]};
  }

  Matrix ToDense() const;
  Matrix GatherRows(std::span<const std::size_t> indices) const;
  BinaryFeatures SelectRows(std::span<const std::size_t> indices) const;

  // Appends all rows of `other`; column counts must agree.
  void Append(const BinaryFeatures& other);

  friend bool operator==(const BinaryFeatures&,
                         const BinaryFeatures&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<uint32_t> indices_;
};

}  // namespace fedsim

#endif  // FEDSIM_MATRIX_H_
