// Copyright 2026 The WIG Authors.
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

#ifndef WIG_COST_MATRIX_H_
#define WIG_COST_MATRIX_H_

#include <Eigen/Dense>

namespace wig {

// Ground cost between vocabulary words. Square, finite, entrywise >= 0,
// symmetric within 1e-9 and with an exactly zero diagonal.
class CostMatrix {
 public:
  CostMatrix() = default;
  // Throws Error(kInvalidArgument) when the invariants do not hold.
  explicit CostMatrix(Eigen::MatrixXd entries);

  Eigen::Index size() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return entries_(i, j);
  }

  // Median of the strictly upper triangle; 0 when size() < 2.
  double MedianOffDiagonal() const;

  // Conjugate permutation: out(i, j) = C(perm[i], perm[j]).
  CostMatrix Permuted(const Eigen::VectorXi& perm) const;

 private:
  Eigen::MatrixXd entries_;
};

}  // namespace wig

#endif  // WIG_COST_MATRIX_H_
