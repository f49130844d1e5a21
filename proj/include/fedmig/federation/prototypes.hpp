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

#include "fedmig/graph/local_graph.hpp"
#include "fedmig/numerics/tensor.hpp"

namespace fedmig::fed {

/// Per-class rows with their support counts. Row h is meaningful only when
/// counts[h] > 0; absent rows are zero.
struct PrototypeSet {
  num::Tensor values;  // H x d
  std::vector<double> counts;

  std::size_t num_classes() const { return counts.size(); }
  std::size_t dim() const { return values.cols(); }
  bool has(std::size_t h) const { return counts[h] > 0.0; }
  std::vector<std::size_t> present() const;
  // Rows of the present classes, in class order.
  num::Tensor present_rows() const;
  // Present-class counts normalized to sum to one (zeros elsewhere).
  std::vector<double> frequencies() const;

  friend bool operator==(const PrototypeSet&, const PrototypeSet&) = default;
};

// |D^h|: train nodes per class.
std::vector<double> train_class_counts(const graph::LocalGraph& g, std::size_t num_classes);

/// lp^h = mean of `embeddings` rows over train nodes labelled h.
PrototypeSet compute_local_prototypes(const num::Tensor& embeddings, const graph::LocalGraph& g,
                                      std::size_t num_classes);

/// Soft per-class means of the generated features over every node, using
/// the classifier's posteriors as weights. Reported for the classes the
/// client holds train nodes of, with those train counts attached.
PrototypeSet compute_generated_means(const num::Tensor& latent, const num::Tensor& logits,
                                     const std::vector<double>& train_counts);

/// Count-weighted mean per class: sum_m |D_m^h| x_m^h / sum_m |D_m^h|.
/// Classes no member reports stay absent.
PrototypeSet aggregate_cluster_prototypes(std::span<const PrototypeSet> members);
PrototypeSet aggregate_generated_cluster_features(std::span<const PrototypeSet> members);

}  // namespace fedmig::fed
