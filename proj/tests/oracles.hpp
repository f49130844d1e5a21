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

// Independent brute-force evaluators. They use plain loops over the defining
// sums and share no code with the library beyond the Tensor container.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fedmig/numerics/tensor.hpp"

namespace fedmig::oracle {

inline double clamp_prob(double x) { return x < 1e-12 ? 1e-12 : x; }

// Integral form of the multi-generator objective:
//   sum_y P_d log(P_d / (P_d + P_m)) + H sum_y P_m log(P_m / (P_d + P_m))
// plus ln 2 (|P_d| + H |P_m|) from rewriting against the mixture, plus the
// entropy constant. P_m is the unnormalized sum of generator distributions.
inline double gan_integral_form(const std::vector<double>& p_data,
                                const std::vector<std::vector<double>>& generators) {
  const std::size_t num_classes = p_data.size();
  const double H = static_cast<double>(num_classes);
  std::vector<double> p_model(num_classes, 0.0);
  for (const auto& g : generators)
    for (std::size_t y = 0; y < num_classes; ++y) p_model[y] += g[y];

  double data_integral = 0.0, model_integral = 0.0, data_mass = 0.0, model_mass = 0.0;
  for (std::size_t y = 0; y < num_classes; ++y) {
    const double both = p_data[y] + p_model[y];
    const double mix = clamp_prob(both / 2.0);
    data_integral += p_data[y] * (std::log(clamp_prob(p_data[y])) - std::log(2.0 * mix));
    model_integral += p_model[y] * (std::log(clamp_prob(p_model[y])) - std::log(2.0 * mix));
    data_mass += p_data[y];
    model_mass += p_model[y];
  }
  const double mixture_shift = std::log(2.0) * (data_mass + H * model_mass);
  const double entropy_constant = -(H + 1.0) * std::log(H + 1.0) + H * std::log(H);
  return data_integral + H * model_integral + mixture_shift + entropy_constant;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += p[i] * std::log(clamp_prob(p[i]) / clamp_prob(q[i]));
  return s;
}

inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * kl(p, m) + 0.5 * kl(q, m);
}

// Row means of `x` grouped by label over the selected rows; absent groups stay
// zero with count zero.
inline num::Tensor group_means(const num::Tensor& x, const std::vector<std::size_t>& labels,
                               const std::vector<bool>& mask, std::size_t groups,
                               std::vector<double>& counts) {
  num::Tensor out = num::Tensor::zeros(groups, x.cols());
  counts.assign(groups, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!mask[i]) continue;
    counts[labels[i]] += 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c) out(labels[i], c) += x(i, c);
  }
  for (std::size_t h = 0; h < groups; ++h)
    if (counts[h] > 0)
      for (std::size_t c = 0; c < x.cols(); ++c) out(h, c) /= counts[h];
  return out;
}

// sum_m w_m x_m / sum_m w_m, elementwise.
inline std::vector<double> weighted_mean(const std::vector<std::vector<double>>& xs,
                                         const std::vector<double>& weights) {
  std::vector<double> out(xs.front().size(), 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < xs.size(); ++m) {
    total += weights[m];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[m] * xs[m][i];
  }
  for (double& v : out) v /= total;
  return out;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix. Returns the
// eigenvalues in descending order and the matching eigenvectors as columns.
inline void jacobi_eigen(num::Tensor a, std::vector<double>& values, num::Tensor& vectors) {
  const std::size_t n = a.rows();
  vectors = num::Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(order[j], order[j]) > a(order[i], order[i])) std::swap(order[i], order[j]);
  values.resize(n);
  num::Tensor sorted = num::Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = a(order[i], order[i]);
    for (std::size_t k = 0; k < n; ++k) sorted(k, i) = vectors(k, order[i]);
  }
  vectors = sorted;
}

}  // namespace fedmig::oracle
