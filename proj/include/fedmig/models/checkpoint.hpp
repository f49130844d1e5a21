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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedmig/models/params.hpp"

namespace fedmig::model {

// Checkpoint format (JSON):
//   {"format": "fedmig.params", "version": 1, "kind": "<kind>",
//    "tensors": [{"name": ..., "shape": [...], "values": [...]}, ...]}
// Tensors appear in visit_fields order. Doubles are written in shortest
// round-trip form, so save/load is bit-exact.
inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  num::Tensor tensor;
};

std::string encode_checkpoint(std::string_view kind, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(std::string_view kind, const std::string& text);

template <template <class> class P>
std::vector<NamedTensor> named_tensors(const P<num::Tensor>& params) {
  std::vector<NamedTensor> out;
  visit_fields(params, [&](std::string_view name, const num::Tensor& t) {
    out.push_back({std::string(name), t});
  });
  return out;
}

// Assigns decoded tensors into `params`; names must match visit order.
template <template <class> class P>
void assign_named(P<num::Tensor>& params, const std::vector<NamedTensor>& tensors);

std::string to_checkpoint(const GeneratorParams& p);
std::string to_checkpoint(const DiscriminatorParams& p);
std::string to_checkpoint(const ProjectionParams& p);
void from_checkpoint(const std::string& text, GeneratorParams& p);
void from_checkpoint(const std::string& text, DiscriminatorParams& p);
void from_checkpoint(const std::string& text, ProjectionParams& p);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fedmig::model
