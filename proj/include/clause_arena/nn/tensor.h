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

#ifndef CLAUSE_ARENA_NN_TENSOR_H_
#define CLAUSE_ARENA_NN_TENSOR_H_

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clause_arena/env.h"

namespace clause_arena::nn {

// Dense row-major tensor of doubles. Rank 1 (vectors) and rank 2 (matrices)
// are all the policy networks need.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);  // zero-filled
  Tensor(std::vector<size_t> shape, std::vector<double> data);

  static Tensor FromVector(std::vector<double> data);
  static Tensor Zeros(size_t n) { return Tensor({n}); }
  static Tensor ZerosLike(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  size_t rows() const { return shape_.at(0); }
  size_t cols() const { return rank() == 2 ? shape_[1] : 1; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& operator()(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }

  bool AllFinite() const;
  void SetZero();
  // this += scale * other; shapes must match.
  void AddScaled(const Tensor& other, double scale = 1.0);
  std::string ShapeString() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

void CheckSameShape(const Tensor& a, const Tensor& b, const std::string& what);

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMatrix> AsMatrix(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}
inline Eigen::Map<RowMatrix> AsMatrix(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}
inline Eigen::Map<const Eigen::VectorXd> AsVector(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}
inline Eigen::Map<Eigen::VectorXd> AsVector(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}

}  // namespace clause_arena::nn

#endif  // CLAUSE_ARENA_NN_TENSOR_H_
