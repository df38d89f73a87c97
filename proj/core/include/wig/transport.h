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

// Entropic optimal transport: Sinkhorn distances with plan recovery and
// weighted Sinkhorn barycenters, all in the log domain.
//
// The regularized cost of a plan P between histograms mu and nu is
//
//   <P, C> + eps * <P, log P>,      P 1 = mu,  P^T 1 = nu,
//
// with 0 log 0 = 0. It is minimized by P = diag(u) K diag(v) where
// K = exp(-C / eps); the scalings are kept as logarithms throughout so that
// small eps or large costs cannot overflow them.

#ifndef WIG_TRANSPORT_H_
#define WIG_TRANSPORT_H_

#include <vector>

#include <Eigen/Dense>

#include "wig/cost_matrix.h"

namespace wig::transport {

struct SinkhornConfig {
  double epsilon = 0.1;
  // Iteration cap and L1 marginal tolerance for convergence-driven solves.
  int max_iter = 1000;
  double tol = 1e-9;
  // Fixed number of barycenter iterations on the differentiable path.
  int unroll_iters = 50;

  void Validate() const;
};

// A probability vector: entries >= 0 summing to 1 within 1e-9.
class Histogram {
 public:
  explicit Histogram(Eigen::VectorXd mass);
  static Histogram Uniform(Eigen::Index n);

  const Eigen::VectorXd& mass() const { return mass_; }
  Eigen::Index size() const { return mass_.size(); }
  double operator[](Eigen::Index i) const { return mass_[i]; }

 private:
  Eigen::VectorXd mass_;
};

// exp(-C / eps) together with log-domain application and its adjoint.
//
// Application computes column-wise log-sum-exp reductions. The fast path
// shifts each input column by its maximum and uses a dense product with the
// precomputed kernel; entries where that product would underflow are
// recomputed with an exact per-entry log-sum-exp, so the result never loses
// the log-domain range.
class GibbsKernel {
 public:
  GibbsKernel(const CostMatrix& cost, double epsilon);

  Eigen::Index size() const { return kernel_.rows(); }
  double epsilon() const { return epsilon_; }
  const Eigen::MatrixXd& kernel() const { return kernel_; }

  // out(i, c) = log sum_j exp(-C(i, j) / eps + in(j, c))
  Eigen::MatrixXd LogApply(const Eigen::MatrixXd& log_in) const;
  // out(j, c) = log sum_i exp(-C(i, j) / eps + in(i, c))
  Eigen::MatrixXd LogApplyTransposed(const Eigen::MatrixXd& log_in) const;

  // Reverse-mode: given out = LogApply(in) and dL/dout, returns dL/din.
  Eigen::MatrixXd LogApplyAdjoint(const Eigen::MatrixXd& log_in,
                                  const Eigen::MatrixXd& log_out,
                                  const Eigen::MatrixXd& grad_out) const;
  Eigen::MatrixXd LogApplyTransposedAdjoint(const Eigen::MatrixXd& log_in,
                                            const Eigen::MatrixXd& log_out,
                                            const Eigen::MatrixXd& grad_out) const;

 private:
  Eigen::MatrixXd Apply(const Eigen::MatrixXd& log_in, bool transposed) const;
  Eigen::MatrixXd Adjoint(const Eigen::MatrixXd& log_in,
                          const Eigen::MatrixXd& log_out,
                          const Eigen::MatrixXd& grad_out, bool transposed) const;

  double epsilon_;
  Eigen::MatrixXd neg_cost_over_eps_;
  Eigen::MatrixXd kernel_;
};

struct TransportPlan {
  Eigen::MatrixXd plan;
  double cost_value = 0.0;     // <P, C>
  double entropy_value = 0.0;  // <P, log P>
};

enum class SolveStatus { kConverged, kMaxIterReached };

struct SinkhornResult {
  // cost_value + eps * entropy_value
  double value = 0.0;
  TransportPlan plan;
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;
  // L1 distance between the plan's row sums and mu after the last iteration.
  double marginal_error = 0.0;
  std::vector<double> error_trace;
};

// Alternating scaling updates until the row-marginal L1 error drops below
// cfg.tol or cfg.max_iter is reached (status kMaxIterReached; the last
// iterate is returned). Zero-mass coordinates pin their scaling to -inf.
// Throws kNumericalCollapse if a scaling becomes NaN or +inf.
SinkhornResult SinkhornDistance(const Histogram& mu, const Histogram& nu,
                                const CostMatrix& cost,
                                const SinkhornConfig& cfg);

enum class BarycenterStop {
  // Exactly cfg.unroll_iters iterations; matches the differentiable path.
  kFixedUnroll,
  // Until the L1 change of the barycenter drops below cfg.tol.
  kConverged,
};

// Weighted barycenter argmin_b sum_k w_k S(topic_k, b) by iterative Bregman
// projections. `topics` is N x K with columns on the simplex, `weights` has
// length K on the simplex.
Histogram SinkhornBarycenter(const Eigen::MatrixXd& topics,
                             const Eigen::VectorXd& weights,
                             const GibbsKernel& kernel,
                             const SinkhornConfig& cfg,
                             BarycenterStop stop = BarycenterStop::kFixedUnroll);
Histogram SinkhornBarycenter(const Eigen::MatrixXd& topics,
                             const Eigen::VectorXd& weights,
                             const CostMatrix& cost, const SinkhornConfig& cfg,
                             BarycenterStop stop = BarycenterStop::kFixedUnroll);

// Batched barycenters over a fixed number of iterations, recording every
// intermediate so that Backward() can run reverse-mode differentiation
// through the unrolled loop.
//
// Per iteration and topic k (all quantities logarithms, columns = batch):
//   x_k   = LogApply(psi_k)           psi_k starts at 0
//   phi_k = log t_k - x_k
//   w_k   = LogApplyTransposed(phi_k)
//   beta  = sum_k weights(k, :) .* w_k
//   psi_k = beta - w_k
// and the output is beta normalized to unit mass per column.
class BarycenterTape {
 public:
  BarycenterTape(const GibbsKernel& kernel, int iterations);

  // log_topics: N x K (may hold -inf for zero mass). weights: K x B.
  // Returns N x B normalized log barycenters.
  const Eigen::MatrixXd& Forward(const Eigen::MatrixXd& log_topics,
                                 const Eigen::MatrixXd& weights);

  struct Gradients {
    Eigen::MatrixXd log_topics;  // N x K, summed over the batch
    Eigen::MatrixXd weights;     // K x B
  };

  // grad_log_output: dL / d(log output), N x B.
  Gradients Backward(const Eigen::MatrixXd& grad_log_output) const;

  const Eigen::MatrixXd& log_output() const { return log_output_; }

 private:
  const GibbsKernel* kernel_;
  int iterations_;
  Eigen::MatrixXd log_topics_;
  Eigen::MatrixXd weights_;
  // Indexed by iteration. x, phi and w stack the topics side by side:
  // column k * B + c belongs to topic k and batch column c.
  std::vector<Eigen::MatrixXd> x_;
  std::vector<Eigen::MatrixXd> phi_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::MatrixXd> beta_;
  Eigen::MatrixXd log_output_;
};

// Column-wise log(sum(exp(.))) and the matching normalization.
Eigen::RowVectorXd LogSumExpColumns(const Eigen::MatrixXd& m);

}  // namespace wig::transport

#endif  // WIG_TRANSPORT_H_
