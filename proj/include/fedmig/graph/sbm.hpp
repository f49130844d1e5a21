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
#include <cstdint>

#include "fedmig/graph/local_graph.hpp"

namespace fedmig::graph {

/// Synthetic class-imbalanced federation: each client holds an independent
/// stochastic-block-model graph whose blocks are the classes, with
/// class-conditional Gaussian features.
///
/// Class H-1 is the minority class with `minority_fraction` of the nodes; the
/// remaining classes share the rest equally. Clients are assigned round-robin
/// to `num_domains` feature domains; `domain_shift` in [0, 1] blends each
/// domain's class means away from the shared ones (0 = identical domains).
struct SbmConfig {
  std::size_t num_clients = 8;
  std::size_t min_nodes = 600;
  std::size_t max_nodes = 600;
  std::size_t num_classes = 4;
  std::size_t feature_dim = 16;
  double minority_fraction = 0.1;
  double p_intra = 0.03;
  double p_inter = 0.005;
  double mean_separation = 1.0;
  double noise = 1.0;
  std::size_t num_domains = 1;
  double domain_shift = 0.0;
  SplitSpec split;
  std::uint64_t seed = 0;

  std::vector<double> class_proportions() const;
  void validate() const;
};

FederationDataset generate_sbm(const SbmConfig& cfg);

}  // namespace fedmig::graph
