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

#include "clause_arena/nn/tensor.h"

#include <cmath>
#include <functional>
#include <numeric>

namespace clause_arena::nn {

Tensor::Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw ContractViolation("tensor needs at least one dimension");
  size_t n = 1;
  for (size_t d : shape_) {
    if (d == 0) throw ContractViolation("tensor dimensions must be positive");
    n *= d;
  }
  data_.assign(n, 0.0);
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data)
    : Tensor(std::move(shape)) {
  if (data.size() != data_.size()) {
    throw ContractViolation("tensor data length " + std::to_string(data.size()) +
                            " does not match shape " + ShapeString());
  }
  data_ = std::move(data);
}

Tensor Tensor::FromVector(std::vector<double> data) {
  const size_t n = data.size();
  return Tensor({n}, std::move(data));
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

void Tensor::AddScaled(const Tensor& other, double scale) {
  CheckSameShape(*this, other, "AddScaled");
  AsVector(*this) += scale * AsVector(other);
}

std::string Tensor::ShapeString() const {
  std::string s = "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

void CheckSameShape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(what + ": shape mismatch " + a.ShapeString() +
                            " vs " + b.ShapeString());
  }
}

}  // namespace clause_arena::nn
