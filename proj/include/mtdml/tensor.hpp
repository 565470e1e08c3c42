/*
 * Copyright 2026 The MTDML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MTDML_TENSOR_HPP_
#define MTDML_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace mtdml {

// Dense row-major matrix of doubles. Samples are rows.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  // Throws DimensionError unless values.size() == rows * cols.
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void fill(double v);

  // Column vector (N x 1) view of a plain vector.
  static Tensor2 column(std::span<const double> v);

  bool operator==(const Tensor2& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// a (n x k) * b (k x m).
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// a^T (k x n)^T * b (k x m) -> (n x m).
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
// a (n x k) * b^T where b is (m x k) -> (n x m).
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

// Horizontal concatenation; all parts must share the row count.
Tensor2 concat_cols(std::span<const Tensor2* const> parts);
// Columns [begin, begin + count).
Tensor2 slice_cols(const Tensor2& a, std::size_t begin, std::size_t count);
// Rows selected by index, in the given order.
Tensor2 gather_rows(const Tensor2& a, std::span<const std::size_t> rows);

bool all_finite(const Tensor2& a);

}  // namespace mtdml

#endif  // MTDML_TENSOR_HPP_
