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
#include <string_view>
#include <type_traits>
#include <vector>

#include "fedmig/numerics/adam.hpp"
#include "fedmig/numerics/tape.hpp"
#include "fedmig/numerics/tensor.hpp"

namespace fedmig::model {

struct ModelDims {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden = 64;
  std::size_t latent = 64;
  std::size_t disc_hidden = 64;
  std::size_t proj_hidden = 64;
  std::size_t proj_out = 32;
};

// Parameter bundles are templated on the leaf type: `Tensor` for stored
// values, `Var` for the same bundle bound to a tape.
template <class T>
struct LinearT {
  T weight;  // in x out
  T bias;    // 1 x out
};

template <class T>
struct SageLayerT {
  T w_self;   // in x out
  T w_neigh;  // in x out
  T bias;     // 1 x out
};

template <class T>
struct GeneratorT {
  SageLayerT<T> layer1;
  SageLayerT<T> layer2;
  LinearT<T> head;     // hidden -> H logits
  LinearT<T> adapter;  // hidden -> latent features
};

template <class T>
struct DiscriminatorT {
  LinearT<T> fc1;
  LinearT<T> fc2;
  LinearT<T> fc3;
};

template <class T>
struct ProjectionT {
  LinearT<T> fc1;
  LinearT<T> fc2;
};

using GeneratorParams = GeneratorT<num::Tensor>;
using DiscriminatorParams = DiscriminatorT<num::Tensor>;
using ProjectionParams = ProjectionT<num::Tensor>;
using GeneratorVars = GeneratorT<num::Var>;
using DiscriminatorVars = DiscriminatorT<num::Var>;
using ProjectionVars = ProjectionT<num::Var>;

namespace detail {
template <class X, template <class> class P>
struct is_bundle : std::false_type {};
template <class T, template <class> class P>
struct is_bundle<P<T>, P> : std::true_type {};
template <class X, template <class> class P>
concept Bundle = is_bundle<std::remove_cvref_t<X>, P>::value;
}  // namespace detail

// visit_fields calls f(name, field) for every leaf in a fixed order. The
// order is the serialization order and the optimizer-state order.
template <class B, class F>
  requires detail::Bundle<B, GeneratorT>
void visit_fields(B&& p, F&& f) {
  f("layer1.w_self", p.layer1.w_self);
  f("layer1.w_neigh", p.layer1.w_neigh);
  f("layer1.bias", p.layer1.bias);
  f("layer2.w_self", p.layer2.w_self);
  f("layer2.w_neigh", p.layer2.w_neigh);
  f("layer2.bias", p.layer2.bias);
  f("head.weight", p.head.weight);
  f("head.bias", p.head.bias);
  f("adapter.weight", p.adapter.weight);
  f("adapter.bias", p.adapter.bias);
}

template <class B, class F>
  requires detail::Bundle<B, DiscriminatorT>
void visit_fields(B&& p, F&& f) {
  f("fc1.weight", p.fc1.weight);
  f("fc1.bias", p.fc1.bias);
  f("fc2.weight", p.fc2.weight);
  f("fc2.bias", p.fc2.bias);
  f("fc3.weight", p.fc3.weight);
  f("fc3.bias", p.fc3.bias);
}

template <class B, class F>
  requires detail::Bundle<B, ProjectionT>
void visit_fields(B&& p, F&& f) {
  f("fc1.weight", p.fc1.weight);
  f("fc1.bias", p.fc1.bias);
  f("fc2.weight", p.fc2.weight);
  f("fc2.bias", p.fc2.bias);
}

// Parameters FedAvg exchanges: everything except the adaptation layer.
inline bool is_backbone_or_head(std::string_view name) {
  return !name.starts_with("adapter.");
}

GeneratorParams init_generator(const ModelDims& dims, std::uint64_t seed);
DiscriminatorParams init_discriminator(const ModelDims& dims, std::uint64_t seed);
ProjectionParams init_projection(const ModelDims& dims, std::uint64_t seed);

template <template <class> class P>
std::size_t parameter_count(const P<num::Tensor>& params) {
  std::size_t n = 0;
  visit_fields(params, [&](std::string_view, const num::Tensor& t) { n += t.size(); });
  return n;
}

template <template <class> class P>
bool all_finite(const P<num::Tensor>& params) {
  bool ok = true;
  visit_fields(params, [&](std::string_view, const num::Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

/// Records every parameter of `params` as a tape leaf.
template <template <class> class P>
P<num::Var> bind(num::Tape& tape, const P<num::Tensor>& params, bool requires_grad) {
  std::vector<const num::Tensor*> leaves;
  visit_fields(params, [&](std::string_view, const num::Tensor& t) { leaves.push_back(&t); });
  P<num::Var> vars{};
  std::size_t i = 0;
  visit_fields(vars, [&](std::string_view, num::Var& v) {
    v = tape.leaf(*leaves[i++], requires_grad);
  });
  return vars;
}

template <template <class> class P>
P<num::Tensor> gradients(const num::Tape& tape, const P<num::Var>& vars) {
  std::vector<num::Tensor> grads;
  visit_fields(vars, [&](std::string_view, const num::Var& v) { grads.push_back(tape.grad(v)); });
  P<num::Tensor> out{};
  std::size_t i = 0;
  visit_fields(out, [&](std::string_view, num::Tensor& t) { t = std::move(grads[i++]); });
  return out;
}

/// Adam state for every leaf of a bundle, in visit order.
template <template <class> class P>
class BundleOptimizer {
 public:
  BundleOptimizer() = default;
  BundleOptimizer(const P<num::Tensor>& params, const num::AdamOptions& options) {
    visit_fields(params, [&](std::string_view, const num::Tensor& t) {
      states_.emplace_back(t.shape(), options);
    });
  }

  void step(P<num::Tensor>& params, const P<num::Tensor>& grads) {
    std::vector<const num::Tensor*> g;
    visit_fields(grads, [&](std::string_view, const num::Tensor& t) { g.push_back(&t); });
    std::size_t i = 0;
    visit_fields(params, [&](std::string_view, num::Tensor& t) {
      num::adam_step(t, *g[i], states_[i]);
      ++i;
    });
  }

  const std::vector<num::AdamState>& states() const { return states_; }

 private:
  std::vector<num::AdamState> states_;
};

}  // namespace fedmig::model
