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

#include "fedmig/models/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fedmig/error.hpp"
#include "json.hpp"

namespace fedmig::model {

std::string encode_checkpoint(std::string_view kind, const std::vector<NamedTensor>& tensors) {
  nlohmann::json doc;
  doc["format"] = "fedmig.params";
  doc["version"] = kCheckpointVersion;
  doc["kind"] = kind;
  auto& arr = doc["tensors"] = nlohmann::json::array();
  for (const auto& nt : tensors) {
    arr.push_back({{"name", nt.name},
                   {"shape", nt.tensor.shape()},
                   {"values", nt.tensor.storage()}});
  }
  return doc.dump();
}

std::vector<NamedTensor> decode_checkpoint(std::string_view kind, const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "fedmig.params") throw ParseError("checkpoint: wrong format tag");
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError(fmt::format("checkpoint: unsupported version {}",
                                   doc.at("version").get<int>()));
    }
    if (doc.at("kind").get<std::string>() != kind) {
      throw ParseError(fmt::format("checkpoint: expected kind '{}', found '{}'", kind,
                                   doc.at("kind").get<std::string>()));
    }
    std::vector<NamedTensor> out;
    for (const auto& t : doc.at("tensors")) {
      out.push_back({t.at("name").get<std::string>(),
                     num::Tensor(t.at("shape").get<num::Shape>(),
                                 t.at("values").get<std::vector<double>>())});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("checkpoint: {}", e.what()));
  }
}

template <template <class> class P>
void assign_named(P<num::Tensor>& params, const std::vector<NamedTensor>& tensors) {
  std::size_t i = 0;
  visit_fields(params, [&](std::string_view name, num::Tensor& t) {
    if (i >= tensors.size() || tensors[i].name != name) {
      throw ParseError(fmt::format("checkpoint: expected tensor '{}'", name));
    }
    t = tensors[i++].tensor;
  });
  if (i != tensors.size()) throw ParseError("checkpoint: unexpected extra tensors");
}

template void assign_named(GeneratorParams&, const std::vector<NamedTensor>&);
template void assign_named(DiscriminatorParams&, const std::vector<NamedTensor>&);
template void assign_named(ProjectionParams&, const std::vector<NamedTensor>&);

std::string to_checkpoint(const GeneratorParams& p) {
  return encode_checkpoint("generator", named_tensors(p));
}
std::string to_checkpoint(const DiscriminatorParams& p) {
  return encode_checkpoint("discriminator", named_tensors(p));
}
std::string to_checkpoint(const ProjectionParams& p) {
  return encode_checkpoint("projection", named_tensors(p));
}

void from_checkpoint(const std::string& text, GeneratorParams& p) {
  assign_named(p, decode_checkpoint("generator", text));
}
void from_checkpoint(const std::string& text, DiscriminatorParams& p) {
  assign_named(p, decode_checkpoint("discriminator", text));
}
void from_checkpoint(const std::string& text, ProjectionParams& p) {
  assign_named(p, decode_checkpoint("projection", text));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fedmig::model
