// Copyright 2026 The fedmig Authors.
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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fedmig::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of 64-bit floats.
///
/// Rank 0, 1 and 2 are supported by the accessors; `rows()`/`cols()` treat a
/// rank-1 tensor as a single row and a rank-0 tensor as 1x1. The value vector
/// always holds exactly product(shape) elements.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols() + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }
  const std::vector<double>& storage() const noexcept { return values_; }

  std::span<double> row_span(std::size_t r);
  std::span<const double> row_span(std::size_t r) const;

  double item() const;
  bool all_finite() const noexcept;
  void fill(double value) noexcept;

  bool same_shape(const Tensor& other) const noexcept {
    return shape_ == other.shape_;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  // Marks parameters that should receive gradients when bound to a tape.
  bool requires_grad = false;

 private:
  Shape shape_;
  std::vector<double> values_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Compressed sparse row index structure (no values; unit weights).
struct Csr {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;

  std::size_t num_rows() const noexcept {
    return offsets.empty() ? 0 : offsets.size() - 1;
  }
  std::size_t degree(std::size_t row) const {
    return offsets[row + 1] - offsets[row];
  }
  std::span<const std::size_t> neighbors(std::size_t row) const {
    return {indices.data() + offsets[row], degree(row)};
  }

  friend bool operator==(const Csr&, const Csr&) = default;
};

// Throws StructuralError if offsets are malformed or an index is >= num_rows.
void validate_csr(const Csr& csr);

}  // namespace fedmig::num
