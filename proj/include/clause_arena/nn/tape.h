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

// Reverse-mode differentiation over a small, fixed set of layer operations.
//
// A Tape records every operation of a forward pass together with a closure
// that propagates the output gradient back to its inputs. Parameters are read
// from a ParameterStore by name; their gradients are accumulated into a
// GradientMap keyed by the same names, so a parameter used several times (the
// shared OfferMLP, a recurrent cell unrolled over turns) receives the sum of
// all contributions.

#ifndef CLAUSE_ARENA_NN_TAPE_H_
#define CLAUSE_ARENA_NN_TAPE_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clause_arena/nn/parameters.h"
#include "clause_arena/nn/tensor.h"

namespace clause_arena::nn {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  // Called with the gradient of the node's output; adds into the gradients of
  // the node's inputs (via MutableGradient) and of parameters (via ParamGrad).
  using Backprop =
      std::function<void(Tape& tape, GradientMap& grads, const Tensor& out_grad)>;

  explicit Tape(const ParameterStore& store) : store_(&store) {}

  const ParameterStore& store() const { return *store_; }

  Var Constant(Tensor value);
  Var Record(Tensor value, Backprop backprop);

  const Tensor& Value(Var v) const;
  // Gradient of the last Backward() seed with respect to `v`.
  const Tensor& Gradient(Var v) const;

  // Accumulates d(seed . output)/d(parameter) into `grads`. Node gradients are
  // reset first, so a tape may be differentiated more than once.
  void Backward(Var output, const Tensor& seed, GradientMap& grads);
  void Backward(Var scalar_output, double seed, GradientMap& grads);

  size_t size() const { return nodes_.size(); }
  void Clear();

  // For use inside Backprop closures.
  Tensor& MutableGradient(Var v);
  Tensor& ParamGrad(GradientMap& grads, const std::string& name) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool touched = false;  // something flowed into grad this Backward()
    Backprop backprop;
  };
  const Node& node(Var v) const;

  const ParameterStore* store_;
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------- Layers

// W x (+ b). `bias` may be empty.
Var Linear(Tape& tape, const std::string& weight, Var x,
           const std::string& bias = "");
Var Relu(Tape& tape, Var x);
// relu(W2 relu(W1 x + b1) + b2) with parameters <prefix>.W1 ... <prefix>.b2.
Var Mlp2(Tape& tape, const std::string& prefix, Var x);
// Row `index` of the table named `name`.
Var Embedding(Tape& tape, const std::string& name, int index);
Var Concat(Tape& tape, std::span<const Var> parts);

// One gated recurrent unit layer (parameters <prefix>.W, .U, .b):
//   r = s(W_r x + U_r h + b_r)
//   z = s(W_z x + U_z h + b_z)
//   n = tanh(W_n x + r * (U_n h + b_n))
//   h' = (1 - z) * n + z * h
Var GruCell(Tape& tape, const std::string& prefix, Var x, Var h);
// Stacked layers <prefix>.0, <prefix>.1, ...; layer l's output feeds l+1.
std::vector<Var> GruStep(Tape& tape, const std::string& prefix, Var x,
                         std::span<const Var> hidden);

Var Softmax(Tape& tape, Var logits);
// log softmax(logits)[index], a scalar.
Var LogSoftmaxAt(Tape& tape, Var logits, int index);
// -sum p log p of softmax(logits), a scalar.
Var Entropy(Tape& tape, Var logits);
// sum_i weights[i] * scalars[i].
Var WeightedSum(Tape& tape, std::span<const Var> scalars,
                std::span<const double> weights);
Var Sum(Tape& tape, Var x);
Var HalfSquaredNorm(Tape& tape, Var x);

// Max-subtracted softmax, no recording.
std::vector<double> SoftmaxValues(std::span<const double> logits);

}  // namespace clause_arena::nn

#endif  // CLAUSE_ARENA_NN_TAPE_H_
