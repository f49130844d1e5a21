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

#include "fedmig/privacy/dp.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fedmig/error.hpp"

namespace fedmig::dp {

void DpConfig::validate() const {
  if (!enabled) return;
  if (!(clip_norm > 0.0)) throw ConfigError("dp.clip_norm must be positive");
  const double sigma = gaussian_sigma(epsilon, delta, 2.0 * clip_norm);
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw ConfigError("dp: sigma is not finite");
}

double gaussian_sigma(double epsilon, double delta, double sensitivity) {
  if (!(epsilon > 0.0)) throw ConfigError(fmt::format("dp: epsilon {} must be > 0", epsilon));
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError(fmt::format("dp: delta {} must lie in (0, 1)", delta));
  }
  if (!(sensitivity > 0.0)) {
    throw ConfigError(fmt::format("dp: sensitivity {} must be > 0", sensitivity));
  }
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

namespace {

double l2_norm(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

void clip_row(std::span<double> x, double clip_norm) {
  double norm = l2_norm(x);
  if (norm <= clip_norm) return;
  double f = clip_norm / norm;
  // Rounding can leave the scaled row a few ulps above the bound.
  for (;;) {
    for (double& v : x) v *= f;
    norm = l2_norm(x);
    if (norm <= clip_norm) return;
    f = std::nextafter(1.0, 0.0);
  }
}

num::Tensor clip_and_perturb(const num::Tensor& rows, const DpConfig& cfg, std::mt19937_64& rng,
                             std::span<const double> counts) {
  if (!cfg.enabled) return rows;
  cfg.validate();
  if (cfg.per_count_sensitivity && counts.size() != rows.rows()) {
    throw ConfigError("dp: per-count sensitivity needs one count per row");
  }
  num::Tensor out = rows;
  const double base = gaussian_sigma(cfg.epsilon, cfg.delta, 2.0 * cfg.clip_norm);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    clip_row(row, cfg.clip_norm);
    double sigma = base;
    if (cfg.per_count_sensitivity) {
      if (!(counts[r] > 0.0)) throw ConfigError("dp: per-count sensitivity with zero count");
      sigma = gaussian_sigma(cfg.epsilon, cfg.delta, 2.0 * cfg.clip_norm / counts[r]);
    }
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : row) v += noise(rng);
  }
  return out;
}

}  // namespace fedmig::dp
