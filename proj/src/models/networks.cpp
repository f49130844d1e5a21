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

#include "fedmig/models/networks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fedmig/error.hpp"

namespace fedmig::model {
namespace {

num::Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  num::Tensor w = num::Tensor::zeros(fan_in, fan_out);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

LinearT<num::Tensor> init_linear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return {glorot(in, out, rng), num::Tensor::zeros(1, out)};
}

SageLayerT<num::Tensor> init_sage(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  auto w_self = glorot(in, out, rng);
  auto w_neigh = glorot(in, out, rng);
  return {std::move(w_self), std::move(w_neigh), num::Tensor::zeros(1, out)};
}

void require_dims(const ModelDims& d) {
  if (d.feature_dim == 0 || d.num_classes == 0 || d.hidden == 0 || d.latent == 0 ||
      d.disc_hidden == 0 || d.proj_hidden == 0 || d.proj_out == 0) {
    throw ConfigError("model dimensions must all be positive");
  }
}

}  // namespace

GeneratorParams init_generator(const ModelDims& d, std::uint64_t seed) {
  require_dims(d);
  std::mt19937_64 rng(seed);
  GeneratorParams p;
  p.layer1 = init_sage(d.feature_dim, d.hidden, rng);
  p.layer2 = init_sage(d.hidden, d.hidden, rng);
  p.head = init_linear(d.hidden, d.num_classes, rng);
  p.adapter = init_linear(d.hidden, d.latent, rng);
  return p;
}

DiscriminatorParams init_discriminator(const ModelDims& d, std::uint64_t seed) {
  require_dims(d);
  std::mt19937_64 rng(seed);
  DiscriminatorParams p;
  p.fc1 = init_linear(d.latent, d.disc_hidden, rng);
  p.fc2 = init_linear(d.disc_hidden, d.disc_hidden, rng);
  p.fc3 = init_linear(d.disc_hidden, d.num_classes, rng);
  return p;
}

ProjectionParams init_projection(const ModelDims& d, std::uint64_t seed) {
  require_dims(d);
  std::mt19937_64 rng(seed);
  ProjectionParams p;
  p.fc1 = init_linear(d.latent, d.proj_hidden, rng);
  p.fc2 = init_linear(d.proj_hidden, d.proj_out, rng);
  return p;
}

num::Var linear_forward(const LinearT<num::Var>& layer, num::Var x) {
  return num::add_row(num::matmul(x, layer.weight), layer.bias);
}

namespace {

num::Var sage_layer(const SageLayerT<num::Var>& layer, num::Var h, const num::Csr& adj) {
  const num::Var self = num::matmul(h, layer.w_self);
  const num::Var neigh = num::matmul(num::neighbor_mean_aggregate(h, adj), layer.w_neigh);
  return num::relu(num::add_row(num::add(self, neigh), layer.bias));
}

}  // namespace

num::Var sage_forward(const GeneratorVars& params, num::Var features, const num::Csr& adjacency) {
  const num::Var h1 = sage_layer(params.layer1, features, adjacency);
  return sage_layer(params.layer2, h1, adjacency);
}

GeneratorOutput generator_forward(const GeneratorVars& params, num::Var features,
                                  const num::Csr& adjacency) {
  GeneratorOutput out;
  out.hidden = sage_forward(params, features, adjacency);
  out.logits = linear_forward(params.head, out.hidden);
  out.latent = linear_forward(params.adapter, out.hidden);
  return out;
}

num::Var discriminator_forward(const DiscriminatorVars& params, num::Var feats) {
  num::Var h = num::relu(linear_forward(params.fc1, feats));
  h = num::relu(linear_forward(params.fc2, h));
  return num::softmax_rows(linear_forward(params.fc3, h));
}

num::Var projection_forward(const ProjectionVars& params, num::Var feats) {
  return linear_forward(params.fc2, num::relu(linear_forward(params.fc1, feats)));
}

GeneratorEval evaluate_generator(const GeneratorParams& params, const graph::LocalGraph& g) {
  num::Tape tape;
  const auto vars = bind(tape, params, false);
  const auto out = generator_forward(vars, tape.constant(g.features), g.adjacency);
  return {out.logits.value(), out.latent.value()};
}

num::Tensor evaluate_discriminator(const DiscriminatorParams& params, const num::Tensor& feats) {
  num::Tape tape;
  const auto vars = bind(tape, params, false);
  return discriminator_forward(vars, tape.constant(feats)).value();
}

std::vector<std::size_t> argmax_rows(const num::Tensor& logits) {
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row_span(i);
    out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace fedmig::model
