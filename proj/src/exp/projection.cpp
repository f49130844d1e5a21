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

#include "fedmig/exp/projection.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <fmt/os.h>

#include "fedmig/error.hpp"

namespace fedmig::exp {

Projection pca_project(const num::Tensor& features, std::size_t k) {
  const std::size_t n = features.rows(), d = features.cols();
  if (n < 2) throw ConfigError("pca_project: need at least two rows");
  if (d == 0 || k == 0) throw ConfigError("pca_project: empty feature or component dimension");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = features(i, j);
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca_project: eigendecomposition failed");

  Projection p;
  p.mean.assign(mu.data(), mu.data() + d);
  for (std::size_t c = 0; c < d; ++c) p.eigenvalues.push_back(eig.eigenvalues()(d - 1 - c));
  p.components = num::Tensor::zeros(d, k);
  for (std::size_t c = 0; c < std::min(k, d); ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - c));
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
      if (std::abs(v(j)) > std::abs(v(pivot))) pivot = j;
    }
    if (v(pivot) < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) p.components(j, c) = v(static_cast<Eigen::Index>(j));
  }
  p.coords = num::Tensor::zeros(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += x(i, j) * p.components(j, c);
      p.coords(i, c) = s;
    }
  }
  return p;
}

void emit_projection_data(const num::Tensor& features, const std::vector<std::size_t>& labels,
                          const std::filesystem::path& out_path) {
  if (labels.size() != features.rows()) throw ShapeError("emit_projection_data: one label per row");
  const Projection p = pca_project(features, 2);
  auto out = fmt::output_file(out_path.string());
  out.print("pc1,pc2,label\n");
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out.print("{:.17g},{:.17g},{}\n", p.coords(i, 0), p.coords(i, 1), labels[i]);
  }
}

}  // namespace fedmig::exp
