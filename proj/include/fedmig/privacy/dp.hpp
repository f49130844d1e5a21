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

#include <random>
#include <span>

#include "fedmig/numerics/tensor.hpp"

namespace fedmig::dp {

struct DpConfig {
  bool enabled = false;
  double epsilon = 1.0;
  double delta = 1e-5;
  double clip_norm = 1.0;
  // Sensitivity 2C / |D_m^h| per uploaded row instead of 2C.
  bool per_count_sensitivity = false;

  void validate() const;
};

// sigma = sensitivity * sqrt(2 ln(1.25 / delta)) / epsilon
double gaussian_sigma(double epsilon, double delta, double sensitivity);

// Scales x down to L2 norm <= clip_norm (no-op when already inside).
void clip_row(std::span<double> x, double clip_norm);

/// Clips every row to `cfg.clip_norm` and adds N(0, sigma^2) per coordinate
/// with sigma from sensitivity 2C (or 2C / counts[r] in per-count mode).
/// Identity when the config is disabled. `counts` may be empty unless
/// per-count mode is on.
num::Tensor clip_and_perturb(const num::Tensor& rows, const DpConfig& cfg, std::mt19937_64& rng,
                             std::span<const double> counts = {});

}  // namespace fedmig::dp
