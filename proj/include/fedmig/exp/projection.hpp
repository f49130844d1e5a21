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
#include <filesystem>
#include <vector>

#include "fedmig/numerics/tensor.hpp"

namespace fedmig::exp {

struct Projection {
  num::Tensor coords;                // N x k
  num::Tensor components;            // d x k, unit columns
  std::vector<double> eigenvalues;   // all d covariance eigenvalues, descending
  std::vector<double> mean;          // column means
};

/// PCA onto the top `k` eigenvectors of the sample covariance. Each
/// component is signed so that its largest-magnitude entry is positive.
/// ConfigError with fewer than two rows.
Projection pca_project(const num::Tensor& features, std::size_t k = 2);

// Writes "pc1,pc2,label" rows of the 2-D projection.
void emit_projection_data(const num::Tensor& features, const std::vector<std::size_t>& labels,
                          const std::filesystem::path& out_path);

}  // namespace fedmig::exp
