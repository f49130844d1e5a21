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

#include "fedmig/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fedmig/error.hpp"
#include "fedmig/models/networks.hpp"

namespace fedmig::loss {

using num::Tensor;
using num::Var;

double ClassDistribution::mass() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

bool ClassDistribution::is_normalized(double tol) const {
  for (double p : probs) {
    if (!(p >= 0.0)) return false;
  }
  return std::abs(mass() - 1.0) <= tol;
}

ClassDistribution ClassDistribution::uniform(std::size_t num_classes) {
  return {std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes))};
}

ClassDistribution sum_distributions(std::span<const ClassDistribution> dists) {
  if (dists.empty()) return {};
  ClassDistribution out{std::vector<double>(dists.front().size(), 0.0)};
  for (const auto& d : dists) {
    if (d.size() != out.size()) throw ShapeError("sum_distributions: class counts differ");
    for (std::size_t i = 0; i < d.size(); ++i) out.probs[i] += d.probs[i];
  }
  return out;
}

Var classification_loss(Var logits, const std::vector<std::size_t>& labels,
                        const std::vector<bool>& mask) {
  const Tensor& z = logits.value();
  if (labels.size() != z.rows() || mask.size() != z.rows()) {
    throw ShapeError("classification_loss: labels/mask length differs from logits rows");
  }
  std::vector<std::size_t> rows, targets;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    rows.push_back(i);
    targets.push_back(labels[i]);
  }
  if (rows.empty()) throw ConfigError("classification_loss: mask selects no nodes");
  return num::cross_entropy_rows(logits, rows, targets);
}

Var discriminator_loss(const model::DiscriminatorVars& disc, Var synthetic, Var prototypes) {
  const Tensor& s = synthetic.value();
  const Tensor& p = prototypes.value();
  if (s.rows() != p.rows() || s.cols() != p.cols() || s.rows() == 0) {
    throw ShapeError(fmt::format("discriminator_loss: synthetic {} vs prototypes {}",
                                 num::shape_string(s.shape()), num::shape_string(p.shape())));
  }
  const Var target = num::detach(model::discriminator_forward(disc, prototypes));
  const Var pred = model::discriminator_forward(disc, synthetic);
  const Var cross = num::sum(num::mul(target, num::log_clamped(pred, num::kProbFloor)));
  return num::scale(cross, -1.0 / static_cast<double>(s.rows()));
}

Var generalized_kl(Var a, Var b) {
  const Var log_ratio = num::sub(num::log_clamped(a, num::kProbFloor),
                                 num::log_clamped(b, num::kProbFloor));
  return num::sum(num::mul(a, log_ratio));
}

Var gan_diversity_loss(Var p_true, Var generator_sum, std::size_t num_classes) {
  const Tensor& p = p_true.value();
  const Tensor& s = generator_sum.value();
  if (p.size() != num_classes || s.size() != num_classes) {
    throw ShapeError(fmt::format("gan_diversity_loss: expected {} classes, got {} and {}",
                                 num_classes, p.size(), s.size()));
  }
  const double H = static_cast<double>(num_classes);
  const Var mix = num::scale(num::add(p_true, generator_sum), 0.5);
  const Var data_term = generalized_kl(p_true, mix);
  const Var model_term = num::scale(generalized_kl(generator_sum, mix), H);
  const double constant = -(H + 1.0) * std::log(H + 1.0) + H * std::log(H);
  return num::add(num::add(data_term, model_term),
                  p_true.tape().constant(Tensor::scalar(constant)));
}

double gan_diversity_loss(const ClassDistribution& p_true,
                          std::span<const ClassDistribution> generators) {
  if (generators.empty()) throw ConfigError("gan_diversity_loss: no generator distributions");
  if (!p_true.is_normalized(1e-6)) throw ConfigError("gan_diversity_loss: p_true not normalized");
  for (const auto& g : generators) {
    if (g.size() != p_true.size()) throw ShapeError("gan_diversity_loss: class counts differ");
    if (!g.is_normalized(1e-6)) {
      throw ConfigError("gan_diversity_loss: generator distribution not normalized");
    }
  }
  num::Tape tape;
  const Var p = tape.constant(p_true.as_row());
  const Var s = tape.constant(sum_distributions(generators).as_row());
  return gan_diversity_loss(p, s, p_true.size()).value().item();
}

Var infonce_mi_loss(const model::ProjectionVars& proj, Var local_prototypes,
                    std::span<const std::size_t> positive, Var generated, double temperature) {
  const Tensor& lp = local_prototypes.value();
  const Tensor& gen = generated.value();
  if (lp.rows() == 0 || positive.empty()) {
    throw ConfigError("infonce_mi_loss: client represents no classes");
  }
  if (positive.size() != lp.rows()) {
    throw ShapeError("infonce_mi_loss: one positive index per prototype row required");
  }
  if (!(temperature > 0.0)) throw ConfigError("infonce_mi_loss: temperature must be positive");
  for (std::size_t j : positive) {
    if (j >= gen.rows()) throw ShapeError("infonce_mi_loss: positive index out of range");
  }
  const Var zl = num::l2_normalize_rows(model::projection_forward(proj, local_prototypes));
  const Var zg = num::l2_normalize_rows(model::projection_forward(proj, generated));
  Var sims = num::matmul(zl, num::transpose(zg));
  if (temperature != 1.0) sims = num::scale(sims, 1.0 / temperature);
  std::vector<std::size_t> rows(positive.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return num::cross_entropy_rows(sims, rows, positive);
}

LossBreakdown composite_loss(double ce, double gan, double mi, double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw ConfigError(fmt::format("composite_loss: negative weight ({}, {})", lambda1, lambda2));
  }
  LossBreakdown b{ce, gan, mi, 0.0, lambda1, lambda2};
  b.composite = ce + lambda1 * gan + lambda2 * mi;
  return b;
}

Var composite_loss(Var ce, Var gan, Var mi, double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw ConfigError(fmt::format("composite_loss: negative weight ({}, {})", lambda1, lambda2));
  }
  Var total = ce;
  if (gan.valid()) total = num::add(total, num::scale(gan, lambda1));
  if (mi.valid()) total = num::add(total, num::scale(mi, lambda2));
  return total;
}

double jensen_shannon_divergence(const ClassDistribution& p, const ClassDistribution& q) {
  if (p.size() != q.size()) throw ShapeError("jensen_shannon_divergence: class counts differ");
  if (!p.is_normalized(1e-6) || !q.is_normalized(1e-6)) {
    throw ConfigError("jensen_shannon_divergence: inputs must be normalized");
  }
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = std::max(0.5 * (p.probs[i] + q.probs[i]), num::kProbFloor);
    double tp = 0.0, tq = 0.0;
    if (p.probs[i] > 0.0) tp = p.probs[i] * std::log(std::max(p.probs[i], num::kProbFloor) / m);
    if (q.probs[i] > 0.0) tq = q.probs[i] * std::log(std::max(q.probs[i], num::kProbFloor) / m);
    js += 0.5 * (tp + tq);
  }
  return js;
}

}  // namespace fedmig::loss
