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
#include <vector>

#include "fedmig/federation/prototypes.hpp"

namespace fedmig::fed {

struct ClusterAssignment {
  std::vector<std::size_t> cluster_of;  // indexed by client id
  std::size_t num_clusters = 0;
  double threshold = 0.0;

  std::vector<std::size_t> members(std::size_t cluster) const;

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

// Every client in its own cluster, ids in client order.
ClusterAssignment singleton_clusters(std::size_t num_clients, double threshold);
ClusterAssignment single_cluster(std::size_t num_clients, double threshold);

/// Mean cosine similarity of the rows both sets hold. Returns false when
/// the sets share no class.
bool representative_similarity(const PrototypeSet& a, const PrototypeSet& b, double& similarity);

/// Agglomerative clustering over per-class representatives, one per client
/// (index = client id). Merges the most similar pair while its similarity
/// exceeds `threshold`; ties go to the lowest cluster ids. A merged
/// representative is the per-class mean of the two (or the one present).
/// With `target_clusters` > 0 the threshold is ignored and merging stops at
/// that many clusters. Clusters are numbered by their smallest client id.
ClusterAssignment agglomerate(const std::vector<PrototypeSet>& representatives, double threshold,
                              std::size_t target_clusters = 0);

}  // namespace fedmig::fed
