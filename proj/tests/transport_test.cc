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
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "wig/error.h"

namespace wig::transport {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SinkhornConfig Tight(double eps) {
  SinkhornConfig cfg;
  cfg.epsilon = eps;
  cfg.tol = 1e-11;
  cfg.max_iter = 1000000;
  return cfg;
}

// Costs whose off-diagonal entries are all far above eps, so the Gibbs
// kernel is the identity to double precision.
CostMatrix Separated(Eigen::Index n) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, 5.0);
  c.diagonal().setZero();
  return CostMatrix(c);
}

double LogSumExpReference(const Eigen::VectorXd& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

TEST(SinkhornConfigTest, RejectsInvalidFields) {
  SinkhornConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SinkhornConfig();
  cfg.max_iter = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SinkhornConfig();
  cfg.unroll_iters = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SinkhornConfig();
  cfg.tol = 0.0;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(HistogramTest, RejectsOffSimplexInput) {
  EXPECT_THROW(Histogram(Eigen::Vector2d(0.5, 0.6)), Error);
  EXPECT_THROW(Histogram(Eigen::Vector2d(-0.5, 1.5)), Error);
  EXPECT_NO_THROW(Histogram(Eigen::Vector2d(0.25, 0.75)));
}

TEST(GibbsKernelTest, LogApplyMatchesDirectLogSumExp) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(7, rng);
  for (double eps : {1.0, 0.1, 0.002}) {
    const GibbsKernel kernel(CostMatrix(c), eps);
    Eigen::MatrixXd in = Eigen::MatrixXd::Random(7, 3) * 50.0;
    in(2, 0) = -kInf;
    in.col(2).setConstant(-kInf);
    in(4, 2) = 1.0;
    const Eigen::MatrixXd out = kernel.LogApply(in);
    const Eigen::MatrixXd out_t = kernel.LogApplyTransposed(in);
    for (Eigen::Index col = 0; col < 3; ++col) {
      for (Eigen::Index i = 0; i < 7; ++i) {
        const Eigen::VectorXd terms = -c.row(i).transpose() / eps + in.col(col);
        const double expected = LogSumExpReference(terms);
        EXPECT_NEAR(out(i, col), expected, 1e-10 * std::max(1.0, std::abs(expected)));
        const Eigen::VectorXd terms_t = -c.col(i) / eps + in.col(col);
        EXPECT_NEAR(out_t(i, col), LogSumExpReference(terms_t),
                    1e-10 * std::max(1.0, std::abs(expected)));
      }
    }
  }
}

TEST(GibbsKernelTest, AllMinusInfinityColumnStaysMinusInfinity) {
  const GibbsKernel kernel(Separated(3), 0.1);
  const Eigen::MatrixXd in = Eigen::MatrixXd::Constant(3, 1, -kInf);
  const Eigen::MatrixXd out = kernel.LogApply(in);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(out(i, 0), -kInf);
}

TEST(GibbsKernelTest, AdjointMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(5, rng);
  const GibbsKernel kernel(CostMatrix(c), 0.1);
  const Eigen::MatrixXd in = Eigen::MatrixXd::Random(5, 2);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Random(5, 2);
  for (bool transposed : {false, true}) {
    auto f = [&](const Eigen::MatrixXd& x) {
      const Eigen::MatrixXd out =
          transposed ? kernel.LogApplyTransposed(x) : kernel.LogApply(x);
      return (out.array() * g.array()).sum();
    };
    const Eigen::MatrixXd out =
        transposed ? kernel.LogApplyTransposed(in) : kernel.LogApply(in);
    const Eigen::MatrixXd analytic =
        transposed ? kernel.LogApplyTransposedAdjoint(in, out, g)
                   : kernel.LogApplyAdjoint(in, out, g);
    const Eigen::MatrixXd fd = oracle::CentralDifference(f, in, 1e-6);
    EXPECT_LT(oracle::RelativeLinf(analytic, fd), 1e-7);
  }
}

TEST(SinkhornDistanceTest, SinglePointIsZero) {
  const Histogram one(Eigen::VectorXd::Ones(1));
  const auto r = SinkhornDistance(one, one, CostMatrix(Eigen::MatrixXd::Zero(1, 1)),
                                  SinkhornConfig());
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  EXPECT_DOUBLE_EQ(r.plan.plan(0, 0), 1.0);
}

TEST(SinkhornDistanceTest, PointMassesForceThePlan) {
  Eigen::Matrix2d c;
  c << 0, 1, 1, 0;
  const auto r = SinkhornDistance(Histogram(Eigen::Vector2d(1, 0)),
                                  Histogram(Eigen::Vector2d(0, 1)), CostMatrix(c),
                                  SinkhornConfig());
  EXPECT_NEAR(r.plan.plan(0, 1), 1.0, 1e-12);
  EXPECT_EQ(r.plan.plan(0, 0), 0.0);
  EXPECT_EQ(r.plan.plan(1, 0), 0.0);
  EXPECT_EQ(r.plan.plan(1, 1), 0.0);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(SinkhornDistanceTest, TwoPointSymmetricCaseMatchesSegmentSearch) {
  Eigen::Matrix2d c;
  c << 0, 1, 1, 0;
  const Eigen::Vector2d half(0.5, 0.5);
  const auto r = SinkhornDistance(Histogram(half), Histogram(half), CostMatrix(c),
                                  Tight(0.1));
  const double oracle = oracle::GridSearchN2(half, half, c, 0.1);
  EXPECT_NEAR(r.value, oracle, 1e-6);
  // Closed form at the stationary point t = 0.5 e^10 / (1 + e^10).
  EXPECT_NEAR(oracle, -0.0693192579459162, 1e-12);
  EXPECT_NEAR(r.value, -0.0693192579459162, 1e-9);
}

TEST(SinkhornDistanceTest, MatchesLongRunOracleOnRandomInstances) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(2, 8);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = size(rng);
    const double eps = (trial % 3 == 0) ? 0.05 : (trial % 3 == 1 ? 0.1 : 0.5);
    const Eigen::MatrixXd c = oracle::RandomSquaredDistances(n, rng);
    const Eigen::VectorXd mu = oracle::RandomHistogram(n, rng, trial % 4 == 0 ? 1 : 0);
    const Eigen::VectorXd nu = oracle::RandomHistogram(n, rng);
    const auto r = SinkhornDistance(Histogram(mu), Histogram(nu), CostMatrix(c), Tight(eps));
    const auto o = oracle::LongRunSinkhorn(mu, nu, c, eps);
    EXPECT_EQ(r.status, SolveStatus::kConverged);
    EXPECT_NEAR(r.value, o.value, 1e-6) << "trial " << trial;
    EXPECT_LT((r.plan.plan - o.plan).cwiseAbs().sum(), 1e-6) << "trial " << trial;
  }
}

TEST(SinkhornDistanceTest, ReportedTermsAddUpToTheValue) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(5, rng);
  const auto r = SinkhornDistance(Histogram(oracle::RandomHistogram(5, rng)),
                                  Histogram(oracle::RandomHistogram(5, rng)),
                                  CostMatrix(c), Tight(0.1));
  EXPECT_NEAR(r.value, r.plan.cost_value + 0.1 * r.plan.entropy_value, 1e-14);
  EXPECT_NEAR(r.plan.cost_value, (r.plan.plan.array() * c.array()).sum(), 1e-14);
}

TEST(SinkhornDistanceTest, MarginalsAreFeasibleUpToSixteenWords) {
  std::mt19937_64 rng(13);
  for (Eigen::Index n = 2; n <= 16; ++n) {
    const Eigen::VectorXd mu = oracle::RandomHistogram(n, rng, n > 4 ? 2 : 0);
    const Eigen::VectorXd nu = oracle::RandomHistogram(n, rng);
    const auto r = SinkhornDistance(Histogram(mu), Histogram(nu),
                                    CostMatrix(oracle::RandomSquaredDistances(n, rng)),
                                    Tight(0.1));
    EXPECT_LT((r.plan.plan.rowwise().sum() - mu).cwiseAbs().sum(), 1e-6);
    EXPECT_LT((r.plan.plan.colwise().sum().transpose() - nu).cwiseAbs().sum(), 1e-6);
    EXPECT_GE(r.plan.plan.minCoeff(), 0.0);
  }
}

TEST(SinkhornDistanceTest, ZeroMassRowsHaveZeroPlanRows) {
  std::mt19937_64 rng(17);
  Eigen::VectorXd mu(4);
  mu << 0.0, 0.5, 0.0, 0.5;
  const auto r = SinkhornDistance(Histogram(mu), Histogram(oracle::RandomHistogram(4, rng)),
                                  CostMatrix(oracle::RandomSquaredDistances(4, rng)),
                                  Tight(0.1));
  EXPECT_EQ(r.plan.plan.row(0).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(r.plan.plan.row(2).cwiseAbs().sum(), 0.0);
}

TEST(SinkhornDistanceTest, SymmetricInItsArguments) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd c = oracle::RandomSquaredDistances(6, rng);
    const Histogram mu(oracle::RandomHistogram(6, rng));
    const Histogram nu(oracle::RandomHistogram(6, rng));
    const double a = SinkhornDistance(mu, nu, CostMatrix(c), Tight(0.1)).value;
    const double b = SinkhornDistance(nu, mu, CostMatrix(c.transpose()), Tight(0.1)).value;
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(SinkhornDistanceTest, MarginalErrorIsNonIncreasing) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = SinkhornDistance(Histogram(oracle::RandomHistogram(8, rng)),
                                    Histogram(oracle::RandomHistogram(8, rng)),
                                    CostMatrix(oracle::RandomSquaredDistances(8, rng)),
                                    Tight(0.05));
    ASSERT_GE(r.error_trace.size(), 2u);
    for (std::size_t i = 2; i < r.error_trace.size(); ++i) {
      EXPECT_LE(r.error_trace[i], r.error_trace[i - 1] + 1e-12);
    }
  }
}

TEST(SinkhornDistanceTest, IterationCapReturnsLastIterate) {
  std::mt19937_64 rng(29);
  SinkhornConfig cfg = Tight(0.05);
  cfg.max_iter = 1;
  const auto r = SinkhornDistance(Histogram(oracle::RandomHistogram(6, rng)),
                                  Histogram(oracle::RandomHistogram(6, rng)),
                                  CostMatrix(oracle::RandomSquaredDistances(6, rng)), cfg);
  EXPECT_EQ(r.status, SolveStatus::kMaxIterReached);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(SinkhornDistanceTest, PermutationEquivariance) {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(5, rng);
  const Eigen::VectorXd mu = oracle::RandomHistogram(5, rng);
  const Eigen::VectorXd nu = oracle::RandomHistogram(5, rng);
  Eigen::VectorXi perm(5);
  perm << 3, 0, 4, 1, 2;
  Eigen::VectorXd mu_p(5), nu_p(5);
  for (int i = 0; i < 5; ++i) {
    mu_p[i] = mu[perm[i]];
    nu_p[i] = nu[perm[i]];
  }
  const auto r = SinkhornDistance(Histogram(mu), Histogram(nu), CostMatrix(c), Tight(0.1));
  const auto rp = SinkhornDistance(Histogram(mu_p), Histogram(nu_p),
                                   CostMatrix(c).Permuted(perm), Tight(0.1));
  EXPECT_NEAR(r.value, rp.value, 1e-10);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      EXPECT_NEAR(rp.plan.plan(i, j), r.plan.plan(perm[i], perm[j]), 1e-10);
    }
  }
}

TEST(SinkhornBarycenterTest, SingleTopicWithSeparatedCostsIsTheTopic) {
  std::mt19937_64 rng(37);
  const Eigen::VectorXd t = oracle::RandomHistogram(6, rng, 1);
  SinkhornConfig cfg;
  const Histogram b = SinkhornBarycenter(t, Eigen::VectorXd::Ones(1), Separated(6), cfg);
  EXPECT_LT((b.mass() - t).cwiseAbs().sum(), 1e-6);
}

TEST(SinkhornBarycenterTest, IdenticalTopicsWithSeparatedCostsGiveTheTopic) {
  std::mt19937_64 rng(41);
  const Eigen::VectorXd t = oracle::RandomHistogram(6, rng);
  const Eigen::MatrixXd topics = t.replicate(1, 3);
  const Histogram b = SinkhornBarycenter(topics, Eigen::Vector3d(0.2, 0.5, 0.3),
                                         Separated(6), SinkhornConfig());
  EXPECT_LT((b.mass() - t).cwiseAbs().sum(), 1e-6);
}

// With overlapping kernels a single topic comes back as one Gibbs blur,
// K^T (t / K 1), at every iteration count.
TEST(SinkhornBarycenterTest, SingleTopicIsItsGibbsBlur) {
  std::mt19937_64 rng(43);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(6, rng);
  const Eigen::VectorXd t = oracle::RandomHistogram(6, rng);
  const Eigen::MatrixXd k = (-c / 0.1).array().exp().matrix();
  const Eigen::VectorXd blur =
      k.transpose() * (t.array() / (k * Eigen::VectorXd::Ones(6)).array()).matrix();
  for (int iters : {1, 10, 50}) {
    SinkhornConfig cfg;
    cfg.unroll_iters = iters;
    const Histogram b = SinkhornBarycenter(t, Eigen::VectorXd::Ones(1), CostMatrix(c), cfg);
    EXPECT_LT((b.mass() - blur).cwiseAbs().sum(), 1e-12);
    const Histogram same = SinkhornBarycenter(t.replicate(1, 2), Eigen::Vector2d(0.3, 0.7),
                                              CostMatrix(c), cfg);
    EXPECT_LT((same.mass() - blur).cwiseAbs().sum(), 1e-12);
  }
}

TEST(SinkhornBarycenterTest, ThreeWordTwoTopicCaseMatchesSimplexGrid) {
  Eigen::Matrix3d c;
  c << 0.0, 0.25, 1.0, 0.25, 0.0, 0.25, 1.0, 0.25, 0.0;
  Eigen::MatrixXd topics(3, 2);
  topics << 0.8, 0.05, 0.15, 0.15, 0.05, 0.8;
  const Eigen::Vector2d w(0.5, 0.5);
  SinkhornConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iter = 100000;
  const Histogram b =
      SinkhornBarycenter(topics, w, CostMatrix(c), cfg, BarycenterStop::kConverged);
  const Eigen::Vector3d oracle = oracle::GridBarycenterN3(topics, w, c, 0.1);
  EXPECT_LT((b.mass() - oracle).cwiseAbs().sum(), 2e-3);
}

TEST(SinkhornBarycenterTest, WeightContinuity) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd c = oracle::RandomSquaredDistances(6, rng);
    Eigen::MatrixXd topics(6, 3);
    for (int k = 0; k < 3; ++k) topics.col(k) = oracle::RandomHistogram(6, rng);
    const Eigen::VectorXd w = oracle::RandomHistogram(3, rng);
    Eigen::VectorXd w2 = w;
    w2[0] += 0.5e-4;
    w2[1] -= 0.5e-4;
    const double delta = (w2 - w).cwiseAbs().sum();
    const Histogram a = SinkhornBarycenter(topics, w, CostMatrix(c), SinkhornConfig());
    const Histogram b = SinkhornBarycenter(topics, w2, CostMatrix(c), SinkhornConfig());
    EXPECT_LE((a.mass() - b.mass()).cwiseAbs().sum(), 10.0 * delta);
  }
}

TEST(SinkhornBarycenterTest, PermutationEquivariance) {
  std::mt19937_64 rng(53);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(5, rng);
  Eigen::MatrixXd topics(5, 2);
  topics.col(0) = oracle::RandomHistogram(5, rng);
  topics.col(1) = oracle::RandomHistogram(5, rng);
  Eigen::VectorXi perm(5);
  perm << 2, 4, 0, 3, 1;
  Eigen::MatrixXd permuted(5, 2);
  for (int i = 0; i < 5; ++i) permuted.row(i) = topics.row(perm[i]);
  const Eigen::Vector2d w(0.35, 0.65);
  const Histogram a = SinkhornBarycenter(topics, w, CostMatrix(c), SinkhornConfig());
  const Histogram b =
      SinkhornBarycenter(permuted, w, CostMatrix(c).Permuted(perm), SinkhornConfig());
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(b[i], a[perm[i]], 1e-12);
}

TEST(SinkhornBarycenterTest, OutputIsAHistogram) {
  std::mt19937_64 rng(59);
  Eigen::MatrixXd topics(8, 4);
  for (int k = 0; k < 4; ++k) topics.col(k) = oracle::RandomHistogram(8, rng, 3);
  const Histogram b = SinkhornBarycenter(topics, oracle::RandomHistogram(4, rng),
                                         CostMatrix(oracle::RandomSquaredDistances(8, rng)),
                                         SinkhornConfig());
  EXPECT_NEAR(b.mass().sum(), 1.0, 1e-12);
  EXPECT_GE(b.mass().minCoeff(), 0.0);
}

TEST(BarycenterTapeTest, ForwardMatchesSingleBarycenters) {
  std::mt19937_64 rng(61);
  const Eigen::MatrixXd c = oracle::RandomSquaredDistances(7, rng);
  const CostMatrix cost(c);
  const GibbsKernel kernel(cost, 0.1);
  Eigen::MatrixXd topics(7, 3);
  for (int k = 0; k < 3; ++k) topics.col(k) = oracle::RandomHistogram(7, rng, 1);
  Eigen::MatrixXd weights(3, 4);
  for (int m = 0; m < 4; ++m) weights.col(m) = oracle::RandomHistogram(3, rng);
  BarycenterTape tape(kernel, 20);
  const Eigen::MatrixXd log_out = tape.Forward(topics.array().log().matrix(), weights);
  SinkhornConfig cfg;
  cfg.unroll_iters = 20;
  for (int m = 0; m < 4; ++m) {
    const Histogram b = SinkhornBarycenter(topics, weights.col(m), kernel, cfg);
    for (int i = 0; i < 7; ++i) EXPECT_NEAR(std::exp(log_out(i, m)), b[i], 1e-13);
  }
}

TEST(BarycenterTapeTest, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(67);
  const GibbsKernel kernel(CostMatrix(oracle::RandomSquaredDistances(5, rng)), 0.1);
  Eigen::MatrixXd log_topics(5, 2);
  for (int k = 0; k < 2; ++k) {
    log_topics.col(k) = oracle::RandomHistogram(5, rng).array().log().matrix();
  }
  Eigen::MatrixXd weights(2, 3);
  for (int m = 0; m < 3; ++m) weights.col(m) = oracle::RandomHistogram(2, rng);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Random(5, 3);
  BarycenterTape tape(kernel, 10);
  tape.Forward(log_topics, weights);
  const auto grads = tape.Backward(g);
  auto f_topics = [&](const Eigen::MatrixXd& lt) {
    BarycenterTape t(kernel, 10);
    return (t.Forward(lt, weights).array() * g.array()).sum();
  };
  auto f_weights = [&](const Eigen::MatrixXd& w) {
    BarycenterTape t(kernel, 10);
    return (t.Forward(log_topics, w).array() * g.array()).sum();
  };
  EXPECT_LT(oracle::RelativeLinf(grads.log_topics,
                                 oracle::CentralDifference(f_topics, log_topics, 1e-6)),
            1e-6);
  EXPECT_LT(oracle::RelativeLinf(grads.weights,
                                 oracle::CentralDifference(f_weights, weights, 1e-6)),
            1e-6);
}

TEST(BarycenterTapeTest, BackwardRejectsShapeMismatch) {
  const GibbsKernel kernel(Separated(3), 0.1);
  BarycenterTape tape(kernel, 2);
  tape.Forward(Eigen::MatrixXd::Constant(3, 1, std::log(1.0 / 3.0)),
               Eigen::MatrixXd::Ones(1, 2));
  EXPECT_THROW(tape.Backward(Eigen::MatrixXd::Zero(3, 5)), Error);
}

}  // namespace
}  // namespace wig::transport
