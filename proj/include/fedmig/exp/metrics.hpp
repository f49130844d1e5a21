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
#include <optional>
#include <vector>

namespace fedmig::exp {

struct MetricsBundle {
  double overall_accuracy = 0.0;
  double minority_accuracy = 0.0;
  double overall_recall = 0.0;  // macro mean over classes with test nodes
  double minority_recall = 0.0;
  // Empty for classes without test nodes.
  std::vector<std::optional<double>> per_class_recall;

  friend bool operator==(const MetricsBundle&, const MetricsBundle&) = default;
};

/// Accuracy and recall on the nodes selected by `test_mask`.
///
/// minority_accuracy is the fraction correct among test nodes whose true
/// label is a minority class; minority_recall is the macro mean of the
/// minority classes' recalls. A minority class without test nodes is
/// skipped with a warning. ConfigError on an empty mask.
MetricsBundle evaluate(const std::vector<std::size_t>& predictions,
                       const std::vector<std::size_t>& labels,
                       const std::vector<bool>& test_mask,
                       const std::vector<std::size_t>& minority_classes,
                       std::size_t num_classes);

}  // namespace fedmig::exp
