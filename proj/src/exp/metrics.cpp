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

#include "fedmig/exp/metrics.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "fedmig/error.hpp"

namespace fedmig::exp {

MetricsBundle evaluate(const std::vector<std::size_t>& predictions,
                       const std::vector<std::size_t>& labels,
                       const std::vector<bool>& test_mask,
                       const std::vector<std::size_t>& minority_classes,
                       std::size_t num_classes) {
  if (predictions.size() != labels.size() || test_mask.size() != labels.size()) {
    throw ShapeError("evaluate: predictions, labels and mask lengths differ");
  }
  std::vector<std::size_t> support(num_classes, 0), hits(num_classes, 0);
  std::size_t total = 0, correct = 0, minority_total = 0, minority_correct = 0;
  auto is_minority = [&](std::size_t c) {
    return std::find(minority_classes.begin(), minority_classes.end(), c) !=
           minority_classes.end();
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!test_mask[i]) continue;
    const std::size_t y = labels[i];
    if (y >= num_classes) throw StructuralError("evaluate: label outside [0, H)");
    const bool ok = predictions[i] == y;
    ++total;
    ++support[y];
    if (ok) {
      ++correct;
      ++hits[y];
    }
    if (is_minority(y)) {
      ++minority_total;
      if (ok) ++minority_correct;
    }
  }
  if (total == 0) throw ConfigError("evaluate: test mask selects no nodes");

  MetricsBundle m;
  m.overall_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  m.minority_accuracy = minority_total == 0 ? 0.0
                                            : static_cast<double>(minority_correct) /
                                                  static_cast<double>(minority_total);
  m.per_class_recall.resize(num_classes);
  double recall_sum = 0.0, minority_recall_sum = 0.0;
  std::size_t classes = 0, minority_seen = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (support[c] == 0) {
      if (is_minority(c)) spdlog::warn("evaluate: minority class {} has no test nodes", c);
      continue;
    }
    const double r = static_cast<double>(hits[c]) / static_cast<double>(support[c]);
    m.per_class_recall[c] = r;
    recall_sum += r;
    ++classes;
    if (is_minority(c)) {
      minority_recall_sum += r;
      ++minority_seen;
    }
  }
  m.overall_recall = recall_sum / static_cast<double>(classes);
  m.minority_recall = minority_seen == 0 ? 0.0 : minority_recall_sum / static_cast<double>(minority_seen);
  return m;
}

}  // namespace fedmig::exp
