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

#include "fedmig/federation/clustering.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "fedmig/error.hpp"

namespace fedmig::fed {

std::vector<std::size_t> ClusterAssignment::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < cluster_of.size(); ++m) {
    if (cluster_of[m] == cluster) out.push_back(m);
  }
  return out;
}

ClusterAssignment singleton_clusters(std::size_t num_clients, double threshold) {
  ClusterAssignment a{std::vector<std::size_t>(num_clients), num_clients, threshold};
  for (std::size_t m = 0; m < num_clients; ++m) a.cluster_of[m] = m;
  return a;
}

ClusterAssignment single_cluster(std::size_t num_clients, double threshold) {
  return {std::vector<std::size_t>(num_clients, 0), num_clients == 0 ? 0u : 1u, threshold};
}

bool representative_similarity(const PrototypeSet& a, const PrototypeSet& b, double& similarity) {
  if (a.num_classes() != b.num_classes() || a.dim() != b.dim()) {
    throw ShapeError("representative_similarity: shape mismatch");
  }
  double total = 0.0;
  std::size_t shared = 0;
  for (std::size_t h = 0; h < a.num_classes(); ++h) {
    if (!a.has(h) || !b.has(h)) continue;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) {
      dot += a.values(h, j) * b.values(h, j);
      na += a.values(h, j) * a.values(h, j);
      nb += b.values(h, j) * b.values(h, j);
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    const double cos = denom > 0.0 ? dot / denom : 0.0;
    total += std::clamp(cos, -1.0, 1.0);
    ++shared;
  }
  if (shared == 0) return false;
  similarity = total / static_cast<double>(shared);
  return true;
}

namespace {

PrototypeSet merge_representatives(const PrototypeSet& a, const PrototypeSet& b) {
  PrototypeSet out = a;
  for (std::size_t h = 0; h < a.num_classes(); ++h) {
    if (a.has(h) && b.has(h)) {
      for (std::size_t j = 0; j < a.dim(); ++j) {
        out.values(h, j) = (a.values(h, j) + b.values(h, j)) / 2.0;
      }
      out.counts[h] = a.counts[h] + b.counts[h];
    } else if (b.has(h)) {
      for (std::size_t j = 0; j < a.dim(); ++j) out.values(h, j) = b.values(h, j);
      out.counts[h] = b.counts[h];
    }
  }
  return out;
}

}  // namespace

ClusterAssignment agglomerate(const std::vector<PrototypeSet>& representatives, double threshold,
                              std::size_t target_clusters) {
  if (representatives.empty()) throw ConfigError("agglomerate: no clients");
  if (!(threshold > -1.0 && threshold <= 1.0)) {
    throw ConfigError("agglomerate: threshold must lie in (-1, 1]");
  }
  struct Group {
    std::vector<std::size_t> members;
    PrototypeSet rep;
  };
  // Groups stay ordered by smallest member id: a merge keeps the lower slot.
  std::vector<Group> groups;
  for (std::size_t m = 0; m < representatives.size(); ++m) {
    groups.push_back({{m}, representatives[m]});
  }
  bool any_shared = representatives.size() < 2;
  while (groups.size() > 1) {
    if (target_clusters > 0 && groups.size() <= target_clusters) break;
    bool found = false;
    double best = 0.0;
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        double s = 0.0;
        if (!representative_similarity(groups[a].rep, groups[b].rep, s)) continue;
        any_shared = true;
        if (!found || s > best) {
          found = true;
          best = s;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (!found) break;
    if (target_clusters == 0 && best <= threshold) break;
    spdlog::debug("agglomerate: merge {} + {} (S = {:.6f})", best_a, best_b, best);
    Group& ga = groups[best_a];
    Group& gb = groups[best_b];
    ga.rep = merge_representatives(ga.rep, gb.rep);
    ga.members.insert(ga.members.end(), gb.members.begin(), gb.members.end());
    std::sort(ga.members.begin(), ga.members.end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(best_b));
  }
  if (!any_shared) spdlog::warn("agglomerate: no client pair shares a class; keeping singletons");

  ClusterAssignment out{std::vector<std::size_t>(representatives.size()), groups.size(), threshold};
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (std::size_t m : groups[k].members) out.cluster_of[m] = k;
  }
  return out;
}

}  // namespace fedmig::fed
