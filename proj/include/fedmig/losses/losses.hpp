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
#include <span>
#include <vector>

#include "fedmig/models/params.hpp"
#include "fedmig/numerics/tape.hpp"

namespace fedmig::loss {

/// Nonnegative H-vector over classes. Normalized when it is a single class
/// posterior; a sum of k posteriors (mass k) when representing the peer sum
/// of a cluster's generators.
struct ClassDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double mass() const;
  bool is_normalized(double tol = 1e-9) const;

  static ClassDistribution uniform(std::size_t num_classes);
  num::Tensor as_row() const { return num::Tensor::row(probs); }
};

ClassDistribution sum_distributions(std::span<const ClassDistribution> dists);

struct LossBreakdown {
  double ce = 0.0;
  double gan = 0.0;
  double mi = 0.0;
  double composite = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

// Mean cross-entropy over the nodes selected by `mask`. ConfigError on an
// empty mask.
num::Var classification_loss(num::Var logits, const std::vector<std::size_t>& labels,
                             const std::vector<bool>& mask);

/// -(1/R) sum_h sum_y D(prototypes_h)[y] log D(synthetic_h)[y] over R aligned
/// class rows. The target D(prototypes) is detached.
num::Var discriminator_loss(const model::DiscriminatorVars& disc, num::Var synthetic,
                            num::Var prototypes);

// sum_i a_i ln(a_i / b_i) with both arguments floored at 1e-12 inside the log.
num::Var generalized_kl(num::Var a, num::Var b);

/// Multi-generator adversarial/diversity loss. With S the (unnormalized) sum
/// of generator distributions and M = (p_true + S) / 2:
///   gKL(p_true || M) + H gKL(S || M) - (H+1) ln(H+1) + H ln H.
num::Var gan_diversity_loss(num::Var p_true, num::Var generator_sum, std::size_t num_classes);

double gan_diversity_loss(const ClassDistribution& p_true,
                          std::span<const ClassDistribution> generators);

/// InfoNCE between the client's prototypes and the cluster's generated
/// features. Row r of `local_prototypes` is positive with row `positive[r]`
/// of `generated`; every other generated row is a negative. Projections are
/// L2-normalized; similarities are divided by `temperature`.
num::Var infonce_mi_loss(const model::ProjectionVars& proj, num::Var local_prototypes,
                         std::span<const std::size_t> positive, num::Var generated,
                         double temperature = 1.0);

LossBreakdown composite_loss(double ce, double gan, double mi, double lambda1, double lambda2);

// ce + lambda1 * gan + lambda2 * mi; invalid gan/mi Vars are left out.
num::Var composite_loss(num::Var ce, num::Var gan, num::Var mi, double lambda1, double lambda2);

// Natural-log Jensen-Shannon divergence; inputs must be normalized (1e-6).
double jensen_shannon_divergence(const ClassDistribution& p, const ClassDistribution& q);

}  // namespace fedmig::loss
