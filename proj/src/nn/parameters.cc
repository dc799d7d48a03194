// Copyright 2026 The Clause Arena Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clause_arena/nn/parameters.h"

#include <cmath>

namespace clause_arena::nn {

void ParameterStore::Add(const std::string& name, Tensor value) {
  if (Contains(name)) throw ContractViolation("duplicate parameter " + name);
  velocities_.emplace(name, Tensor::ZerosLike(value));
  params_.emplace(name, std::move(value));
}

const Tensor& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractViolation("unknown parameter " + name);
  return it->second;
}

Tensor& ParameterStore::Mutable(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).Get(name));
}

const Tensor& ParameterStore::Velocity(const std::string& name) const {
  auto it = velocities_.find(name);
  if (it == velocities_.end()) throw ContractViolation("unknown parameter " + name);
  return it->second;
}

Tensor& ParameterStore::MutableVelocity(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).Velocity(name));
}

size_t ParameterStore::ParameterCount() const {
  size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

namespace {

struct ParamShape {
  std::string name;
  std::vector<size_t> shape;
  enum { kWeight, kBias, kTable } role;
  size_t fan_in = 0;
};

std::vector<ParamShape> ShapesOf(const LayerSpec& spec) {
  auto u = [](int v) { return static_cast<size_t>(v); };
  std::vector<ParamShape> out;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Mlp2Spec>) {
          out.push_back({s.name + ".W1", {u(s.hidden), u(s.in)}, ParamShape::kWeight, u(s.in)});
          out.push_back({s.name + ".b1", {u(s.hidden)}, ParamShape::kBias});
          out.push_back({s.name + ".W2", {u(s.out), u(s.hidden)}, ParamShape::kWeight, u(s.hidden)});
          out.push_back({s.name + ".b2", {u(s.out)}, ParamShape::kBias});
        } else if constexpr (std::is_same_v<T, EmbeddingSpec>) {
          out.push_back({s.name, {u(s.rows), u(s.dim)}, ParamShape::kTable});
        } else if constexpr (std::is_same_v<T, GruSpec>) {
          const size_t h = u(s.hidden_dim);
          for (int l = 0; l < s.layers; ++l) {
            const size_t in = l == 0 ? u(s.input_dim) : h;
            const std::string p = s.name + "." + std::to_string(l);
            out.push_back({p + ".W", {3 * h, in}, ParamShape::kWeight, in});
            out.push_back({p + ".U", {3 * h, h}, ParamShape::kWeight, h});
            out.push_back({p + ".b", {3 * h}, ParamShape::kBias});
          }
        } else {
          out.push_back({s.name + ".W", {u(s.out), u(s.in)}, ParamShape::kWeight, u(s.in)});
          if (s.bias) out.push_back({s.name + ".b", {u(s.out)}, ParamShape::kBias});
        }
      },
      spec);
  return out;
}

}  // namespace

void ValidateLayerSpec(const LayerSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        bool ok;
        if constexpr (std::is_same_v<T, Mlp2Spec>) {
          ok = s.in > 0 && s.hidden > 0 && s.out > 0;
        } else if constexpr (std::is_same_v<T, EmbeddingSpec>) {
          ok = s.rows > 0 && s.dim > 0;
        } else if constexpr (std::is_same_v<T, GruSpec>) {
          ok = s.input_dim > 0 && s.hidden_dim > 0 && s.layers > 0;
        } else {
          ok = s.in > 0 && s.out > 0;
        }
        if (!ok || s.name.empty()) {
          throw ContractViolation("layer '" + s.name + "' has a non-positive dimension");
        }
      },
      spec);
}

void InitializeLayer(ParameterStore& store, const LayerSpec& spec, Rng& rng) {
  ValidateLayerSpec(spec);
  for (const ParamShape& p : ShapesOf(spec)) {
    Tensor t(p.shape);
    if (p.role == ParamShape::kWeight) {
      const double bound = std::sqrt(1.0 / static_cast<double>(p.fan_in));
      for (double& v : t.values()) v = UniformReal(rng, -bound, bound);
    } else if (p.role == ParamShape::kTable) {
      for (double& v : t.values()) v = UniformReal(rng, -0.1, 0.1);
    }
    store.Add(p.name, std::move(t));
  }
}

void AddZeroLayer(ParameterStore& store, const LayerSpec& spec) {
  ValidateLayerSpec(spec);
  for (const ParamShape& p : ShapesOf(spec)) store.Add(p.name, Tensor(p.shape));
}

void SgdNesterovStep(ParameterStore& store, const GradientMap& grads,
                     double lr, double momentum) {
  for (const auto& [name, g] : grads) {
    if (!store.Contains(name)) {
      throw ContractViolation("gradient for unknown parameter " + name);
    }
    CheckSameShape(store.Get(name), g, "optimizer step for " + name);
  }
  for (const auto& [name, g] : grads) {
    auto v = AsVector(store.MutableVelocity(name));
    auto theta = AsVector(store.Mutable(name));
    const auto grad = AsVector(g);
    v = momentum * v - lr * grad;
    theta += momentum * v - lr * grad;
  }
}

}  // namespace clause_arena::nn
