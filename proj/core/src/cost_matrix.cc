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

#include "wig/cost_matrix.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "wig/error.h"

namespace wig {

CostMatrix::CostMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "cost matrix must be square");
  }
  const Eigen::Index n = entries_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (entries_(i, i) != 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "cost diagonal must be zero");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double c = entries_(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cost entries must be finite and nonnegative");
      }
      if (std::abs(c - entries_(j, i)) > 1e-9) {
        throw Error(ErrorCode::kInvalidArgument, "cost matrix not symmetric");
      }
    }
  }
}

double CostMatrix::MedianOffDiagonal() const {
  const Eigen::Index n = size();
  if (n < 2) return 0.0;
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) upper.push_back(entries_(i, j));
  }
  const std::size_t mid = upper.size() / 2;
  std::nth_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(mid),
                   upper.end());
  const double hi = upper[mid];
  if (upper.size() % 2 == 1) return hi;
  const double lo = *std::max_element(
      upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

CostMatrix CostMatrix::Permuted(const Eigen::VectorXi& perm) const {
  const Eigen::Index n = size();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = entries_(perm[i], perm[j]);
  }
  return CostMatrix(std::move(out));
}

}  // namespace wig
