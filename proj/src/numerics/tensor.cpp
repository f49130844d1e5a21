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

#include "fedmig/numerics/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "fedmig/error.hpp"

namespace fedmig::num {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, "x"));
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw ShapeError(fmt::format("tensor of shape {} given {} values",
                                 shape_string(shape_), values_.size()));
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor(Shape{rows, cols});
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  Tensor t(Shape{rows, cols});
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1, 1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{1, n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
  return shape_.size() >= 2 ? shape_[0] : 1;
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 1;
  return shape_.size() == 1 ? shape_[0] : shape_[1];
}

std::span<double> Tensor::row_span(std::size_t r) {
  return std::span<double>(values_).subspan(r * cols(), cols());
}

std::span<const double> Tensor::row_span(std::size_t r) const {
  return std::span<const double>(values_).subspan(r * cols(), cols());
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError(fmt::format("item() on tensor of shape {}",
                                 shape_string(shape_)));
  }
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) noexcept {
  std::fill(values_.begin(), values_.end(), value);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", what,
                                 shape_string(a.shape()),
                                 shape_string(b.shape())));
  }
}

void validate_csr(const Csr& csr) {
  if (csr.offsets.empty() || csr.offsets.front() != 0 ||
      csr.offsets.back() != csr.indices.size()) {
    throw StructuralError("csr: malformed row offsets");
  }
  for (std::size_t r = 0; r + 1 < csr.offsets.size(); ++r) {
    if (csr.offsets[r] > csr.offsets[r + 1]) {
      throw StructuralError("csr: row offsets not monotone");
    }
  }
  const std::size_t n = csr.num_rows();
  for (std::size_t idx : csr.indices) {
    if (idx >= n) {
      throw StructuralError(
          fmt::format("csr: neighbor index {} out of range for {} nodes", idx, n));
    }
  }
}

}  // namespace fedmig::num
