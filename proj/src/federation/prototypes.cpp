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

#include "fedmig/federation/prototypes.hpp"

#include "fedmig/error.hpp"
#include "fedmig/numerics/tape.hpp"

namespace fedmig::fed {

std::vector<std::size_t> PrototypeSet::present() const {
  std::vector<std::size_t> out;
  for (std::size_t h = 0; h < counts.size(); ++h) {
    if (has(h)) out.push_back(h);
  }
  return out;
}

num::Tensor PrototypeSet::present_rows() const {
  const auto classes = present();
  num::Tensor out = num::Tensor::zeros(classes.size(), dim());
  for (std::size_t r = 0; r < classes.size(); ++r) {
    for (std::size_t j = 0; j < dim(); ++j) out(r, j) = values(classes[r], j);
  }
  return out;
}

std::vector<double> PrototypeSet::frequencies() const {
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> f(counts.size(), 0.0);
  if (total <= 0.0) return f;
  for (std::size_t h = 0; h < counts.size(); ++h) f[h] = counts[h] / total;
  return f;
}

std::vector<double> train_class_counts(const graph::LocalGraph& g, std::size_t num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (g.train_mask[i]) counts.at(g.labels[i]) += 1.0;
  }
  return counts;
}

PrototypeSet compute_local_prototypes(const num::Tensor& embeddings, const graph::LocalGraph& g,
                                      std::size_t num_classes) {
  if (embeddings.rows() != g.num_nodes) {
    throw ShapeError("compute_local_prototypes: embedding rows != num_nodes");
  }
  PrototypeSet p{num::Tensor::zeros(num_classes, embeddings.cols()),
                 train_class_counts(g, num_classes)};
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (!g.train_mask[i]) continue;
    const std::size_t h = g.labels[i];
    for (std::size_t j = 0; j < embeddings.cols(); ++j) p.values(h, j) += embeddings(i, j);
  }
  for (std::size_t h = 0; h < num_classes; ++h) {
    if (!p.has(h)) continue;
    for (std::size_t j = 0; j < embeddings.cols(); ++j) p.values(h, j) /= p.counts[h];
  }
  return p;
}

PrototypeSet compute_generated_means(const num::Tensor& latent, const num::Tensor& logits,
                                     const std::vector<double>& train_counts) {
  const std::size_t n = latent.rows(), d = latent.cols(), k = train_counts.size();
  if (logits.rows() != n || logits.cols() != k) {
    throw ShapeError("compute_generated_means: logits must be N x H");
  }
  const num::Tensor probs = num::softmax_rows(logits);
  PrototypeSet p{num::Tensor::zeros(k, d), train_counts};
  std::vector<double> mass(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 0; h < k; ++h) {
      const double s = probs(i, h);
      mass[h] += s;
      for (std::size_t j = 0; j < d; ++j) p.values(h, j) += s * latent(i, j);
    }
  }
  for (std::size_t h = 0; h < k; ++h) {
    if (!p.has(h) || mass[h] <= 0.0) {
      p.counts[h] = 0.0;
      for (std::size_t j = 0; j < d; ++j) p.values(h, j) = 0.0;
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) p.values(h, j) /= mass[h];
  }
  return p;
}

PrototypeSet aggregate_cluster_prototypes(std::span<const PrototypeSet> members) {
  if (members.empty()) throw ConfigError("aggregate: no members");
  const std::size_t k = members.front().num_classes(), d = members.front().dim();
  PrototypeSet out{num::Tensor::zeros(k, d), std::vector<double>(k, 0.0)};
  for (const PrototypeSet& m : members) {
    if (m.num_classes() != k || m.dim() != d) throw ShapeError("aggregate: member shape mismatch");
    for (std::size_t h = 0; h < k; ++h) {
      if (!m.has(h)) continue;
      out.counts[h] += m.counts[h];
      for (std::size_t j = 0; j < d; ++j) out.values(h, j) += m.counts[h] * m.values(h, j);
    }
  }
  for (std::size_t h = 0; h < k; ++h) {
    if (!out.has(h)) continue;
    for (std::size_t j = 0; j < d; ++j) out.values(h, j) /= out.counts[h];
  }
  return out;
}

PrototypeSet aggregate_generated_cluster_features(std::span<const PrototypeSet> members) {
  return aggregate_cluster_prototypes(members);
}

}  // namespace fedmig::fed
