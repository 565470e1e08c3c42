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

#include "mtdml/tensor.hpp"

#include <cmath>
#include <string>

#include "mtdml/error.hpp"

namespace mtdml {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("Tensor2: " + std::to_string(values_.size()) +
                         " values for shape " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

void Tensor2::fill(double v) {
  for (double& x : values_) x = v;
}

Tensor2 Tensor2::column(std::span<const double> v) {
  return Tensor2(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()));
  }
  Tensor2 out(a.rows(), b.cols());
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: row counts " + std::to_string(a.rows()) +
                         " and " + std::to_string(b.rows()));
  }
  Tensor2 out(a.cols(), b.cols());
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k).data();
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += aki * brow[j];
    }
  }
  return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column counts " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.cols()));
  }
  Tensor2 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

Tensor2 concat_cols(std::span<const Tensor2* const> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Tensor2* p : parts) {
    if (p->rows() != rows) {
      throw DimensionError("concat_cols: row counts differ");
    }
    cols += p->cols();
  }
  Tensor2 out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out.row(r).data();
    for (const Tensor2* p : parts) {
      for (double v : p->row(r)) *o++ = v;
    }
  }
  return out;
}

Tensor2 slice_cols(const Tensor2& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) {
    throw DimensionError("slice_cols: range exceeds column count");
  }
  Tensor2 out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = a(r, begin + c);
  }
  return out;
}

Tensor2 gather_rows(const Tensor2& a, std::span<const std::size_t> rows) {
  Tensor2 out(rows.size(), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    auto src = a.row(rows[i]);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < a.cols(); ++c) dst[c] = src[c];
  }
  return out;
}

bool all_finite(const Tensor2& a) {
  for (double v : a.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace mtdml
