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

#include "fedmig/graph/local_graph.hpp"
#include "fedmig/models/params.hpp"

namespace fedmig::model {

struct GeneratorOutput {
  num::Var hidden;  // second GraphSAGE layer output, N x hidden
  num::Var logits;  // N x H
  num::Var latent;  // N x latent, the synthetic features
};

num::Var linear_forward(const LinearT<num::Var>& layer, num::Var x);

// h = ReLU(x W_self + mean_{N(i)}(x) W_neigh + b), applied twice.
num::Var sage_forward(const GeneratorVars& params, num::Var features,
                      const num::Csr& adjacency);

GeneratorOutput generator_forward(const GeneratorVars& params, num::Var features,
                                  const num::Csr& adjacency);

// Class-probability rows (softmax of three ReLU-separated linear layers).
num::Var discriminator_forward(const DiscriminatorVars& params, num::Var feats);

// Unnormalized projection; the contrastive loss L2-normalizes rows.
num::Var projection_forward(const ProjectionVars& params, num::Var feats);

struct GeneratorEval {
  num::Tensor logits;
  num::Tensor latent;
};

// Forward pass without gradients.
GeneratorEval evaluate_generator(const GeneratorParams& params, const graph::LocalGraph& g);
num::Tensor evaluate_discriminator(const DiscriminatorParams& params, const num::Tensor& feats);

std::vector<std::size_t> argmax_rows(const num::Tensor& logits);

}  // namespace fedmig::model
