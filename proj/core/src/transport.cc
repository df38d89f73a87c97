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

#include "wig/transport.h"

#include <cmath>
#include <limits>

#include "wig/error.h"

namespace wig::transport {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// exp() of anything below this is treated as an exact zero, which keeps
// subnormals out of the dense products.
constexpr double kMinExponent = -700.0;
// Products below this are recomputed exactly in the log domain.
constexpr double kMinSum = 1e-280;
// Above this the rescaling factor in the adjoint risks overflow.
constexpr double kMaxExponent = 600.0;

double SafeExp(double t) { return t < kMinExponent ? 0.0 : std::exp(t); }

// out = exp(t) with exact zeros where t < kMinExponent. The exp is taken as
// one vectorized pass and masked afterwards; select() would go scalar.
void MaskedExp(const Eigen::ArrayXd& t, Eigen::Ref<Eigen::VectorXd> out) {
  out.array() = t.exp();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t[i] < kMinExponent) out[i] = 0.0;
  }
}

void CheckSimplexColumns(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if ((m.col(c).array() < 0.0).any() || !m.col(c).allFinite() ||
        std::abs(m.col(c).sum() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + " column is not on the simplex");
    }
  }
}

Eigen::MatrixXd SafeLog(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out(i, c) = m(i, c) > 0.0 ? std::log(m(i, c)) : kNegInf;
    }
  }
  return out;
}

// NaN and +inf are failures; -inf is a legitimate zero scaling.
void CheckScalings(const Eigen::MatrixXd& m, const char* where) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double v = m(i, c);
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        throw Error(ErrorCode::kNumericalCollapse,
                    std::string("non-finite scaling in ") + where);
      }
    }
  }
}

}  // namespace

void SinkhornConfig::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  if (max_iter < 1 || unroll_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_iter and unroll_iters must be >= 1");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  }
}

Histogram::Histogram(Eigen::VectorXd mass) : mass_(std::move(mass)) {
  if (mass_.size() == 0 || !mass_.allFinite() || (mass_.array() < 0.0).any() ||
      std::abs(mass_.sum() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "histogram must be nonnegative and sum to one");
  }
}

Histogram Histogram::Uniform(Eigen::Index n) {
  return Histogram(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

Eigen::RowVectorXd LogSumExpColumns(const Eigen::MatrixXd& m) {
  Eigen::RowVectorXd out(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mx = m.col(c).maxCoeff();
    if (mx == kNegInf) {
      out[c] = kNegInf;
      continue;
    }
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += std::exp(m(i, c) - mx);
    out[c] = mx + std::log(s);
  }
  return out;
}

GibbsKernel::GibbsKernel(const CostMatrix& cost, double epsilon)
    : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  neg_cost_over_eps_ = -cost.entries() / epsilon;
  kernel_ = neg_cost_over_eps_.unaryExpr([](double t) { return SafeExp(t); });
}

Eigen::MatrixXd GibbsKernel::LogApply(const Eigen::MatrixXd& log_in) const {
  return Apply(log_in, false);
}

Eigen::MatrixXd GibbsKernel::LogApplyTransposed(
    const Eigen::MatrixXd& log_in) const {
  return Apply(log_in, true);
}

Eigen::MatrixXd GibbsKernel::LogApplyAdjoint(
    const Eigen::MatrixXd& log_in, const Eigen::MatrixXd& log_out,
    const Eigen::MatrixXd& grad_out) const {
  return Adjoint(log_in, log_out, grad_out, false);
}

Eigen::MatrixXd GibbsKernel::LogApplyTransposedAdjoint(
    const Eigen::MatrixXd& log_in, const Eigen::MatrixXd& log_out,
    const Eigen::MatrixXd& grad_out) const {
  return Adjoint(log_in, log_out, grad_out, true);
}

Eigen::MatrixXd GibbsKernel::Apply(const Eigen::MatrixXd& log_in,
                                   bool transposed) const {
  const Eigen::Index n = size();
  const Eigen::Index b = log_in.cols();
  const Eigen::RowVectorXd shift = log_in.colwise().maxCoeff();
  Eigen::MatrixXd scaled(n, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    if (shift[c] == kNegInf) {
      scaled.col(c).setZero();
      continue;
    }
    MaskedExp(log_in.col(c).array() - shift[c], scaled.col(c));
  }
  Eigen::MatrixXd sums(n, b);
  if (transposed) {
    sums.noalias() = kernel_.transpose() * scaled;
  } else {
    sums.noalias() = kernel_ * scaled;
  }

  Eigen::MatrixXd out(n, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    if (shift[c] == kNegInf) {
      out.col(c).setConstant(kNegInf);
      continue;
    }
    out.col(c) = (sums.col(c).array().log() + shift[c]).matrix();
    if ((sums.col(c).array() > kMinSum).all()) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (sums(i, c) > kMinSum) continue;
      double mx = kNegInf;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double g = transposed ? neg_cost_over_eps_(j, i) : neg_cost_over_eps_(i, j);
        mx = std::max(mx, g + log_in(j, c));
      }
      double acc = 0.0;
      if (mx != kNegInf) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const double g = transposed ? neg_cost_over_eps_(j, i) : neg_cost_over_eps_(i, j);
          acc += std::exp(g + log_in(j, c) - mx);
        }
      }
      out(i, c) = mx == kNegInf ? kNegInf : mx + std::log(acc);
    }
  }
  return out;
}

// For out_i = LSE_j(G_ij + in_j):  d out_i / d in_j = exp(G_ij + in_j - out_i).
// Split exp(in_j - out_i) = exp(in_j + s) * exp(-out_i - s) with
// s = max_i(-out_i) so that the second factor never exceeds one; the first
// factor is bounded by exp(C_ij / eps).
Eigen::MatrixXd GibbsKernel::Adjoint(const Eigen::MatrixXd& log_in,
                                     const Eigen::MatrixXd& log_out,
                                     const Eigen::MatrixXd& grad_out,
                                     bool transposed) const {
  const Eigen::Index n = size();
  const Eigen::Index b = log_in.cols();
  Eigen::VectorXd shift(b);
  Eigen::MatrixXd h(n, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto out = log_out.col(c).array();
    const auto finite = out.isFinite();
    const double s = finite.any() ? finite.select(-out, kNegInf).maxCoeff() : kNegInf;
    shift[c] = s;
    if (s == kNegInf) {
      h.col(c).setZero();
      continue;
    }
    MaskedExp(-out - s, h.col(c));
    for (Eigen::Index i = 0; i < n; ++i) {
      h(i, c) = finite[i] ? h(i, c) * grad_out(i, c) : 0.0;
    }
  }
  // The adjoint of applying K is applying K^T, and vice versa.
  Eigen::MatrixXd r(n, b);
  if (transposed) {
    r.noalias() = kernel_ * h;
  } else {
    r.noalias() = kernel_.transpose() * h;
  }

  Eigen::MatrixXd grad_in(n, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    if (shift[c] == kNegInf) {
      grad_in.col(c).setZero();
      continue;
    }
    const Eigen::ArrayXd t = log_in.col(c).array() + shift[c];
    grad_in.col(c).array() = t.min(kMaxExponent).exp() * r.col(c).array();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (t[j] < kMinExponent) grad_in(j, c) = 0.0;
    }
    if ((t <= kMaxExponent).all()) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (t[j] <= kMaxExponent) continue;
      const double a = log_in(j, c);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(log_out(i, c))) continue;
        const double g = transposed ? neg_cost_over_eps_(j, i) : neg_cost_over_eps_(i, j);
        acc += std::exp(g + a - log_out(i, c)) * grad_out(i, c);
      }
      grad_in(j, c) = acc;
    }
  }
  return grad_in;
}

SinkhornResult SinkhornDistance(const Histogram& mu, const Histogram& nu,
                                const CostMatrix& cost,
                                const SinkhornConfig& cfg) {
  cfg.Validate();
  const Eigen::Index n = cost.size();
  if (mu.size() != n || nu.size() != n) {
    throw Error(ErrorCode::kInvalidArgument,
                "histogram sizes do not match the cost matrix");
  }
  const GibbsKernel kernel(cost, cfg.epsilon);
  const Eigen::VectorXd log_mu = SafeLog(mu.mass());
  const Eigen::VectorXd log_nu = SafeLog(nu.mass());

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (log_nu[j] == kNegInf) g[j] = kNegInf;
  }

  SinkhornResult result;
  result.status = SolveStatus::kMaxIterReached;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Eigen::VectorXd kg = kernel.LogApply(g);
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] = log_mu[i] == kNegInf ? kNegInf : log_mu[i] - kg[i];
    }
    CheckScalings(f, "row scaling");
    const Eigen::VectorXd kf = kernel.LogApplyTransposed(f);
    for (Eigen::Index j = 0; j < n; ++j) {
      g[j] = log_nu[j] == kNegInf ? kNegInf : log_nu[j] - kf[j];
    }
    CheckScalings(g, "column scaling");

    // Columns match nu exactly after the g update; measure the rows.
    const Eigen::VectorXd rows = kernel.LogApply(g);
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double row_mass = f[i] == kNegInf ? 0.0 : std::exp(f[i] + rows[i]);
      err += std::abs(row_mass - mu[i]);
    }
    result.error_trace.push_back(err);
    result.iterations = it;
    result.marginal_error = err;
    if (err < cfg.tol) {
      result.status = SolveStatus::kConverged;
      break;
    }
  }

  const Eigen::MatrixXd neg = -cost.entries() / cfg.epsilon;
  TransportPlan& tp = result.plan;
  tp.plan = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (f[i] == kNegInf || g[j] == kNegInf) continue;
      const double log_p = f[i] + neg(i, j) + g[j];
      const double p = std::exp(log_p);
      tp.plan(i, j) = p;
      if (p > 0.0) {
        tp.cost_value += p * cost(i, j);
        tp.entropy_value += p * log_p;
      }
    }
  }
  result.value = tp.cost_value + cfg.epsilon * tp.entropy_value;
  return result;
}

namespace {

// One iteration of the Bregman projection loop on log scalings. All topics
// are stacked side by side: column k * B + c of psi, x, phi and w belongs to
// topic k and batch column c. Returns beta and updates psi in place.
void BarycenterStep(const GibbsKernel& kernel, const Eigen::MatrixXd& log_topics,
                    const Eigen::MatrixXd& weights, Eigen::MatrixXd& psi,
                    Eigen::MatrixXd& x, Eigen::MatrixXd& phi, Eigen::MatrixXd& w,
                    Eigen::MatrixXd& beta) {
  const Eigen::Index topics = log_topics.cols();
  const Eigen::Index b = weights.cols();
  const Eigen::Index n = log_topics.rows();
  x = kernel.LogApply(psi);
  phi.resize(n, topics * b);
  for (Eigen::Index k = 0; k < topics; ++k) {
    const auto lt = log_topics.col(k).array();
    for (Eigen::Index c = 0; c < b; ++c) {
      phi.col(k * b + c) = (lt == kNegInf).select(kNegInf, lt - x.col(k * b + c).array()).matrix();
    }
  }
  CheckScalings(phi, "barycenter scaling");
  w = kernel.LogApplyTransposed(phi);
  beta = Eigen::MatrixXd::Zero(n, b);
  for (Eigen::Index k = 0; k < topics; ++k) {
    for (Eigen::Index c = 0; c < b; ++c) {
      const double lam = weights(k, c);
      if (lam != 0.0) beta.col(c) += lam * w.col(k * b + c);
    }
  }
  if (!beta.allFinite()) {
    throw Error(ErrorCode::kNumericalCollapse, "non-finite barycenter iterate");
  }
  for (Eigen::Index k = 0; k < topics; ++k) {
    psi.middleCols(k * b, b) = beta - w.middleCols(k * b, b);
  }
}

Eigen::MatrixXd NormalizeLogColumns(const Eigen::MatrixXd& log_m) {
  const Eigen::RowVectorXd lse = LogSumExpColumns(log_m);
  Eigen::MatrixXd out = log_m;
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c).array() -= lse[c];
  return out;
}

}  // namespace

Histogram SinkhornBarycenter(const Eigen::MatrixXd& topics,
                             const Eigen::VectorXd& weights,
                             const GibbsKernel& kernel,
                             const SinkhornConfig& cfg, BarycenterStop stop) {
  cfg.Validate();
  if (topics.rows() != kernel.size() || topics.cols() != weights.size() ||
      topics.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "barycenter shape mismatch");
  }
  CheckSimplexColumns(topics, "topic");
  CheckSimplexColumns(weights, "weight");

  const Eigen::MatrixXd log_topics = SafeLog(topics);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(topics.rows(), topics.cols());
  Eigen::MatrixXd x, phi, w, beta;
  Eigen::VectorXd prev;
  const int iters = stop == BarycenterStop::kFixedUnroll ? cfg.unroll_iters
                                                         : cfg.max_iter;
  for (int it = 0; it < iters; ++it) {
    BarycenterStep(kernel, log_topics, weights, psi, x, phi, w, beta);
    if (stop == BarycenterStop::kConverged) {
      Eigen::VectorXd current = NormalizeLogColumns(beta).col(0).array().exp();
      if (prev.size() > 0 && (current - prev).lpNorm<1>() < cfg.tol) break;
      prev = std::move(current);
    }
  }
  Eigen::VectorXd b = NormalizeLogColumns(beta).col(0).array().exp();
  b /= b.sum();
  return Histogram(std::move(b));
}

Histogram SinkhornBarycenter(const Eigen::MatrixXd& topics,
                             const Eigen::VectorXd& weights,
                             const CostMatrix& cost, const SinkhornConfig& cfg,
                             BarycenterStop stop) {
  cfg.Validate();
  return SinkhornBarycenter(topics, weights, GibbsKernel(cost, cfg.epsilon), cfg,
                            stop);
}

BarycenterTape::BarycenterTape(const GibbsKernel& kernel, int iterations)
    : kernel_(&kernel), iterations_(iterations) {
  if (iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "unroll depth must be >= 1");
  }
}

const Eigen::MatrixXd& BarycenterTape::Forward(const Eigen::MatrixXd& log_topics,
                                               const Eigen::MatrixXd& weights) {
  if (log_topics.rows() != kernel_->size() ||
      log_topics.cols() != weights.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "barycenter tape shape mismatch");
  }
  const Eigen::Index n = log_topics.rows();
  const Eigen::Index b = weights.cols();
  const Eigen::Index k = log_topics.cols();
  const auto l = static_cast<std::size_t>(iterations_);
  log_topics_ = log_topics;
  weights_ = weights;
  x_.assign(l, {});
  phi_.assign(l, {});
  w_.assign(l, {});
  beta_.assign(l, {});

  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, k * b);
  for (std::size_t it = 0; it < l; ++it) {
    BarycenterStep(*kernel_, log_topics, weights, psi, x_[it], phi_[it], w_[it], beta_[it]);
  }
  log_output_ = NormalizeLogColumns(beta_.back());
  return log_output_;
}

BarycenterTape::Gradients BarycenterTape::Backward(
    const Eigen::MatrixXd& grad_log_output) const {
  const Eigen::Index n = log_topics_.rows();
  const Eigen::Index b = weights_.cols();
  const Eigen::Index k = log_topics_.cols();
  const auto l = static_cast<std::size_t>(iterations_);
  if (grad_log_output.rows() != n || grad_log_output.cols() != b) {
    throw Error(ErrorCode::kInvalidArgument, "gradient shape mismatch");
  }

  Gradients grads;
  grads.log_topics = Eigen::MatrixXd::Zero(n, k);
  grads.weights = Eigen::MatrixXd::Zero(k, b);

  // Through the final normalization: out = beta - LSE(beta).
  Eigen::MatrixXd grad_beta = grad_log_output;
  for (Eigen::Index c = 0; c < b; ++c) {
    const double total = grad_log_output.col(c).sum();
    grad_beta.col(c) -= total * log_output_.col(c).array().exp().matrix();
  }

  Eigen::MatrixXd grad_psi = Eigen::MatrixXd::Zero(n, k * b);
  Eigen::MatrixXd psi_in(n, k * b);
  for (std::size_t it = l; it-- > 0;) {
    // psi_k = beta - w_k feeds the next iteration (zero for the last one).
    for (Eigen::Index t = 0; t < k; ++t) grad_beta += grad_psi.middleCols(t * b, b);
    Eigen::MatrixXd grad_w = -grad_psi;
    for (Eigen::Index t = 0; t < k; ++t) {
      for (Eigen::Index c = 0; c < b; ++c) {
        grad_w.col(t * b + c) += weights_(t, c) * grad_beta.col(c);
        grads.weights(t, c) += grad_beta.col(c).dot(w_[it].col(t * b + c));
      }
    }
    const Eigen::MatrixXd grad_phi =
        kernel_->LogApplyTransposedAdjoint(phi_[it], w_[it], grad_w);
    for (Eigen::Index t = 0; t < k; ++t) {
      grads.log_topics.col(t) += grad_phi.middleCols(t * b, b).rowwise().sum();
    }
    if (it == 0) break;  // psi at iteration 0 is the constant 0.
    for (Eigen::Index t = 0; t < k; ++t) {
      psi_in.middleCols(t * b, b) = beta_[it - 1] - w_[it - 1].middleCols(t * b, b);
    }
    grad_psi = kernel_->LogApplyAdjoint(psi_in, x_[it], -grad_phi);
    grad_beta.setZero();
  }
  return grads;
}

}  // namespace wig::transport
