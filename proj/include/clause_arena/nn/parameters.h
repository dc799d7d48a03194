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

#ifndef CLAUSE_ARENA_NN_PARAMETERS_H_
#define CLAUSE_ARENA_NN_PARAMETERS_H_

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "clause_arena/nn/tensor.h"
#include "clause_arena/random.h"

namespace clause_arena::nn {

using GradientMap = std::map<std::string, Tensor>;

// Named parameters plus the optimizer velocity of each. Ordered by name so
// iteration (and therefore serialization and updates) is deterministic.
class ParameterStore {
 public:
  void Add(const std::string& name, Tensor value);

  bool Contains(const std::string& name) const { return params_.count(name) > 0; }
  const Tensor& Get(const std::string& name) const;
  Tensor& Mutable(const std::string& name);
  const Tensor& Velocity(const std::string& name) const;
  Tensor& MutableVelocity(const std::string& name);

  const std::map<std::string, Tensor>& parameters() const { return params_; }
  const std::map<std::string, Tensor>& velocities() const { return velocities_; }
  size_t ParameterCount() const;

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> velocities_;
};

// relu(W2 relu(W1 x + b1) + b2). Parameters: <name>.W1 .b1 .W2 .b2
struct Mlp2Spec {
  std::string name;
  int in = 0, hidden = 0, out = 0;
};
// Parameter: <name> with shape rows x dim.
struct EmbeddingSpec {
  std::string name;
  int rows = 0, dim = 0;
};
// Stacked GRU. Parameters per layer l: <name>.<l>.W (3H x in), .U (3H x H),
// .b (3H); gate blocks are ordered reset, update, candidate.
struct GruSpec {
  std::string name;
  int input_dim = 0, hidden_dim = 0, layers = 0;
};
// W x, optionally + b. Parameters: <name>.W (out x in) [, <name>.b].
struct LinearSpec {
  std::string name;
  int in = 0, out = 0;
  bool bias = false;
};

using LayerSpec = std::variant<Mlp2Spec, EmbeddingSpec, GruSpec, LinearSpec>;

void ValidateLayerSpec(const LayerSpec& spec);

// Weights ~ U[-sqrt(1/fan_in), sqrt(1/fan_in)], biases 0, embeddings
// ~ U[-0.1, 0.1].
void InitializeLayer(ParameterStore& store, const LayerSpec& spec, Rng& rng);

// Adds every parameter of `spec` filled with zeros.
void AddZeroLayer(ParameterStore& store, const LayerSpec& spec);

// Nesterov momentum SGD on a descent gradient:
//   v <- mu v - lr g;   theta <- theta + mu v - lr g
void SgdNesterovStep(ParameterStore& store, const GradientMap& grads,
                     double lr, double momentum);

}  // namespace clause_arena::nn

#endif  // CLAUSE_ARENA_NN_PARAMETERS_H_
