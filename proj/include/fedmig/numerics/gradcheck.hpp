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

#include <functional>

#include "fedmig/numerics/tensor.hpp"

namespace fedmig::num {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient of `f` at `x`, one coordinate at a time.
/// Throws NumericError if any evaluation of `f` is non-finite.
Tensor finite_difference_gradient(const ScalarFn& f, const Tensor& x,
                                  double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||); the plain difference norm when both are
/// below 1e-10.
double relative_error(const Tensor& a, const Tensor& b);

}  // namespace fedmig::num
