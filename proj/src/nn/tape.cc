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

#include "clause_arena/nn/tape.h"

#include <algorithm>
#include <cmath>
#include <memory>

namespace clause_arena::nn {

Var Tape::Constant(Tensor value) { return Record(std::move(value), nullptr); }

Var Tape::Record(Tensor value, Backprop backprop) {
  if (!value.AllFinite()) throw ContractViolation("non-finite value recorded on tape");
  nodes_.push_back(Node{std::move(value), Tensor(), false, std::move(backprop)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size()) {
    throw ContractViolation("variable is not on this tape");
  }
  return nodes_[v.id];
}

const Tensor& Tape::Value(Var v) const { return node(v).value; }

const Tensor& Tape::Gradient(Var v) const {
  const Node& n = node(v);
  if (n.grad.shape() != n.value.shape()) {
    throw ContractViolation("no gradient: Backward() has not reached this variable");
  }
  return n.grad;
}

Tensor& Tape::MutableGradient(Var v) {
  node(v);  // bounds check
  Node& n = nodes_[v.id];
  n.touched = true;
  return n.grad;
}

Tensor& Tape::ParamGrad(GradientMap& grads, const std::string& name) const {
  auto it = grads.find(name);
  if (it == grads.end()) {
    it = grads.emplace(name, Tensor::ZerosLike(store_->Get(name))).first;
  }
  return it->second;
}

void Tape::Backward(Var output, const Tensor& seed, GradientMap& grads) {
  if (nodes_.empty()) throw ContractViolation("backward called before any forward pass");
  CheckSameShape(node(output).value, seed, "backward seed");
  for (Node& n : nodes_) {
    if (n.grad.shape() != n.value.shape()) {
      n.grad = Tensor::ZerosLike(n.value);
    } else {
      n.grad.SetZero();
    }
    n.touched = false;
  }
  nodes_[output.id].grad = seed;
  nodes_[output.id].touched = true;
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.touched || !n.backprop) continue;
    // The closure may append to gradients of earlier nodes only; copy the
    // seed gradient out of the node so the reference stays valid.
    const Tensor out_grad = n.grad;
    n.backprop(*this, grads, out_grad);
  }
}

void Tape::Backward(Var scalar_output, double seed, GradientMap& grads) {
  const Tensor& v = Value(scalar_output);
  if (v.size() != 1) throw ContractViolation("scalar backward on a non-scalar");
  Backward(scalar_output, Tensor(v.shape(), {seed}), grads);
}

void Tape::Clear() { nodes_.clear(); }

// ---------------------------------------------------------------- Layers

namespace {

void CheckVectorLength(const Tensor& t, size_t n, const std::string& what) {
  if (t.rank() != 1 || t.size() != n) {
    throw ContractViolation(what + ": expected a vector of length " +
                            std::to_string(n) + ", got " + t.ShapeString());
  }
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Var Linear(Tape& tape, const std::string& weight, Var x, const std::string& bias) {
  const Tensor& w = tape.store().Get(weight);
  const Tensor& xv = tape.Value(x);
  if (w.rank() != 2) throw ContractViolation(weight + " is not a matrix");
  CheckVectorLength(xv, w.cols(), "Linear(" + weight + ")");
  Tensor y = Tensor::Zeros(w.rows());
  AsVector(y).noalias() = AsMatrix(w) * AsVector(xv);
  if (!bias.empty()) {
    const Tensor& b = tape.store().Get(bias);
    CheckSameShape(y, b, "Linear bias " + bias);
    AsVector(y) += AsVector(b);
  }
  return tape.Record(std::move(y), [weight, bias, x](Tape& t, GradientMap& grads,
                                                     const Tensor& g) {
    const Tensor& w = t.store().Get(weight);
    AsVector(t.MutableGradient(x)).noalias() +=
        AsMatrix(w).transpose() * AsVector(g);
    AsMatrix(t.ParamGrad(grads, weight)).noalias() +=
        AsVector(g) * AsVector(t.Value(x)).transpose();
    if (!bias.empty()) AsVector(t.ParamGrad(grads, bias)) += AsVector(g);
  });
}

Var Relu(Tape& tape, Var x) {
  Tensor y = tape.Value(x);
  for (double& v : y.values()) v = std::max(v, 0.0);
  return tape.Record(std::move(y), [x](Tape& t, GradientMap&, const Tensor& g) {
    const Tensor& xv = t.Value(x);
    Tensor& gx = t.MutableGradient(x);
    for (size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0) gx[i] += g[i];
    }
  });
}

Var Mlp2(Tape& tape, const std::string& prefix, Var x) {
  Var hidden = Relu(tape, Linear(tape, prefix + ".W1", x, prefix + ".b1"));
  return Relu(tape, Linear(tape, prefix + ".W2", hidden, prefix + ".b2"));
}

Var Embedding(Tape& tape, const std::string& name, int index) {
  const Tensor& table = tape.store().Get(name);
  if (index < 0 || static_cast<size_t>(index) >= table.rows()) {
    throw ContractViolation("embedding " + name + ": index " +
                            std::to_string(index) + " out of range");
  }
  const size_t dim = table.cols();
  std::vector<double> row(table.data() + index * dim,
                          table.data() + (index + 1) * dim);
  return tape.Record(Tensor::FromVector(std::move(row)),
                     [name, index](Tape& t, GradientMap& grads, const Tensor& g) {
                       Tensor& gt = t.ParamGrad(grads, name);
                       const size_t dim = gt.cols();
                       for (size_t j = 0; j < dim; ++j) gt(index, j) += g[j];
                     });
}

Var Concat(Tape& tape, std::span<const Var> parts) {
  std::vector<double> out;
  std::vector<Var> inputs(parts.begin(), parts.end());
  for (Var p : inputs) {
    const Tensor& v = tape.Value(p);
    if (v.rank() != 1) throw ContractViolation("Concat expects vectors");
    out.insert(out.end(), v.values().begin(), v.values().end());
  }
  return tape.Record(Tensor::FromVector(std::move(out)),
                     [inputs](Tape& t, GradientMap&, const Tensor& g) {
                       size_t offset = 0;
                       for (Var p : inputs) {
                         Tensor& gp = t.MutableGradient(p);
                         for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
                         offset += gp.size();
                       }
                     });
}

Var GruCell(Tape& tape, const std::string& prefix, Var x, Var h) {
  const std::string wn = prefix + ".W", un = prefix + ".U", bn = prefix + ".b";
  const Tensor& w = tape.store().Get(wn);
  const Tensor& u = tape.store().Get(un);
  const Tensor& b = tape.store().Get(bn);
  const Tensor& xv = tape.Value(x);
  const Tensor& hv = tape.Value(h);
  const size_t hd = u.cols();
  if (u.rows() != 3 * hd || w.rows() != 3 * hd || b.size() != 3 * hd) {
    throw ContractViolation("GRU " + prefix + ": inconsistent parameter shapes");
  }
  CheckVectorLength(xv, w.cols(), "GRU " + prefix + " input");
  CheckVectorLength(hv, hd, "GRU " + prefix + " hidden");

  Eigen::VectorXd wx = AsMatrix(w) * AsVector(xv);
  Eigen::VectorXd uh = AsMatrix(u) * AsVector(hv) + AsVector(b);
  // Saved for the backward pass: gates r, z, candidate n and U_n h + b_n.
  auto saved = std::make_shared<Eigen::VectorXd>(4 * hd);
  Eigen::VectorXd& s = *saved;
  Tensor out = Tensor::Zeros(hd);
  for (size_t i = 0; i < hd; ++i) {
    const double r = Sigmoid(wx[i] + uh[i]);
    const double z = Sigmoid(wx[hd + i] + uh[hd + i]);
    const double un_h = uh[2 * hd + i];
    const double n = std::tanh(wx[2 * hd + i] + r * un_h);
    s[i] = r;
    s[hd + i] = z;
    s[2 * hd + i] = n;
    s[3 * hd + i] = un_h;
    out[i] = (1.0 - z) * n + z * hv[i];
  }
  return tape.Record(std::move(out), [wn, un, bn, x, h, saved, hd](
                                         Tape& t, GradientMap& grads,
                                         const Tensor& g) {
    const Eigen::VectorXd& s = *saved;
    const Tensor& hv = t.Value(h);
    Eigen::VectorXd da_x(3 * hd);  // pre-activation grads on the W x side
    Eigen::VectorXd da_h(3 * hd);  // ... on the U h + b side
    Tensor& gh = t.MutableGradient(h);
    for (size_t i = 0; i < hd; ++i) {
      const double r = s[i], z = s[hd + i], n = s[2 * hd + i], un_h = s[3 * hd + i];
      const double dn = g[i] * (1.0 - z);
      const double dz = g[i] * (hv[i] - n);
      gh[i] += g[i] * z;
      const double da_n = dn * (1.0 - n * n);
      const double dr = da_n * un_h;
      const double da_r = dr * r * (1.0 - r);
      const double da_z = dz * z * (1.0 - z);
      da_x[i] = da_r;
      da_x[hd + i] = da_z;
      da_x[2 * hd + i] = da_n;
      da_h[i] = da_r;
      da_h[hd + i] = da_z;
      da_h[2 * hd + i] = da_n * r;
    }
    const Tensor& w = t.store().Get(wn);
    const Tensor& u = t.store().Get(un);
    AsVector(t.MutableGradient(x)).noalias() += AsMatrix(w).transpose() * da_x;
    AsVector(gh).noalias() += AsMatrix(u).transpose() * da_h;
    AsMatrix(t.ParamGrad(grads, wn)).noalias() +=
        da_x * AsVector(t.Value(x)).transpose();
    AsMatrix(t.ParamGrad(grads, un)).noalias() += da_h * AsVector(hv).transpose();
    AsVector(t.ParamGrad(grads, bn)) += da_h;
  });
}

std::vector<Var> GruStep(Tape& tape, const std::string& prefix, Var x,
                         std::span<const Var> hidden) {
  std::vector<Var> out;
  out.reserve(hidden.size());
  Var input = x;
  for (size_t l = 0; l < hidden.size(); ++l) {
    input = GruCell(tape, prefix + "." + std::to_string(l), input, hidden[l]);
    out.push_back(input);
  }
  return out;
}

std::vector<double> SoftmaxValues(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

namespace {

double LogSumExp(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - m);
  return m + std::log(total);
}

}  // namespace

Var Softmax(Tape& tape, Var logits) {
  const Tensor& l = tape.Value(logits);
  if (l.rank() != 1) throw ContractViolation("Softmax expects a vector");
  Tensor p = Tensor::FromVector(SoftmaxValues(l.values()));
  const Tensor saved = p;
  return tape.Record(std::move(p), [logits, saved](Tape& t, GradientMap&,
                                                   const Tensor& g) {
    const double dot = AsVector(g).dot(AsVector(saved));
    Tensor& gl = t.MutableGradient(logits);
    for (size_t i = 0; i < gl.size(); ++i) gl[i] += saved[i] * (g[i] - dot);
  });
}

Var LogSoftmaxAt(Tape& tape, Var logits, int index) {
  const Tensor& l = tape.Value(logits);
  if (l.rank() != 1 || index < 0 || static_cast<size_t>(index) >= l.size()) {
    throw ContractViolation("LogSoftmaxAt: index out of range");
  }
  const double value = l[index] - LogSumExp(l.values());
  return tape.Record(Tensor::FromVector({value}), [logits, index](
                                                       Tape& t, GradientMap&,
                                                       const Tensor& g) {
    const std::vector<double> p = SoftmaxValues(t.Value(logits).values());
    Tensor& gl = t.MutableGradient(logits);
    for (size_t i = 0; i < gl.size(); ++i) {
      gl[i] += g[0] * ((static_cast<int>(i) == index ? 1.0 : 0.0) - p[i]);
    }
  });
}

Var Entropy(Tape& tape, Var logits) {
  const Tensor& l = tape.Value(logits);
  if (l.rank() != 1) throw ContractViolation("Entropy expects a vector");
  const double lse = LogSumExp(l.values());
  double h = 0.0;
  for (double li : l.values()) {
    const double logp = li - lse;
    h -= std::exp(logp) * logp;
  }
  return tape.Record(Tensor::FromVector({h}), [logits, h, lse](
                                                  Tape& t, GradientMap&,
                                                  const Tensor& g) {
    const Tensor& l = t.Value(logits);
    Tensor& gl = t.MutableGradient(logits);
    for (size_t i = 0; i < gl.size(); ++i) {
      const double logp = l[i] - lse;
      gl[i] -= g[0] * std::exp(logp) * (logp + h);
    }
  });
}

Var WeightedSum(Tape& tape, std::span<const Var> scalars,
                std::span<const double> weights) {
  if (scalars.size() != weights.size()) {
    throw ContractViolation("WeightedSum: size mismatch");
  }
  double total = 0.0;
  for (size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& v = tape.Value(scalars[i]);
    if (v.size() != 1) throw ContractViolation("WeightedSum expects scalars");
    total += weights[i] * v[0];
  }
  std::vector<Var> in(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return tape.Record(Tensor::FromVector({total}),
                     [in, w](Tape& t, GradientMap&, const Tensor& g) {
                       for (size_t i = 0; i < in.size(); ++i) {
                         t.MutableGradient(in[i])[0] += w[i] * g[0];
                       }
                     });
}

Var Sum(Tape& tape, Var x) {
  const double total = AsVector(tape.Value(x)).sum();
  return tape.Record(Tensor::FromVector({total}),
                     [x](Tape& t, GradientMap&, const Tensor& g) {
                       AsVector(t.MutableGradient(x)).array() += g[0];
                     });
}

Var HalfSquaredNorm(Tape& tape, Var x) {
  const double total = 0.5 * AsVector(tape.Value(x)).squaredNorm();
  return tape.Record(Tensor::FromVector({total}),
                     [x](Tape& t, GradientMap&, const Tensor& g) {
                       AsVector(t.MutableGradient(x)) += g[0] * AsVector(t.Value(x));
                     });
}

}  // namespace clause_arena::nn
