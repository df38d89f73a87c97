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

// Wasserstein dictionary learning. Topics T = softmax(R) and per-document
// weights Lambda = softmax(A) (both column-wise) are fitted by minibatch Adam
// so that the Sinkhorn barycenter of the topics under each document's weights
// reconstructs the document's word distribution. Gradients come from
// reverse-mode differentiation through the unrolled barycenter loop.

#ifndef WIG_TRAINING_H_
#define WIG_TRAINING_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wig/cost_matrix.h"
#include "wig/transport.h"

namespace wig::training {

enum class LossKind { kKl, kL2 };

LossKind ParseLossKind(std::string_view name);  // "kl" or "l2"
std::string_view LossKindName(LossKind kind);

struct TrainConfig {
  int topics = 4;
  int batch_size = 64;
  double learning_rate = 0.005;
  int epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::kKl;
  // Fraction of documents held out from training, in [0, 1).
  double holdout_fraction = 0.0;
  // Stop once the relative epoch-loss improvement stays below early_stop_tol
  // for this many consecutive epochs. 0 disables early stopping.
  int early_stop_patience = 5;
  double early_stop_tol = 1e-4;
  // Adam passes over the heldout documents per epoch (weights warm-started).
  int heldout_passes = 10;
  // < 1 means all hardware threads. Results do not depend on this value.
  int threads = 0;
  // When set, a NonFiniteLoss failure writes R, A and the batch here first.
  std::string diagnostics_path;

  void Validate() const;
};

// Column-wise softmax, exp(col - max(col)) / sum.
Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& p);
Eigen::MatrixXd LogSoftmaxColumns(const Eigen::MatrixXd& p);

// KL(y || y_hat) over the support of y, or squared L2 distance. Throws
// kDegenerateReconstruction for KL when y_hat vanishes on the support of y.
double ReconstructionLoss(const transport::Histogram& y,
                          const transport::Histogram& y_hat, LossKind kind);

// Same loss from log(y_hat); writes dL/dlog(y_hat) when grad is non-null.
double ReconstructionLossFromLog(const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& log_y_hat,
                                 LossKind kind, Eigen::VectorXd* grad);

struct AdamParams {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  std::int64_t step = 0;

  static AdamState Zeros(Eigen::Index rows, Eigen::Index cols);
};

// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  bias-correct;
// param <- param - lr * m_hat / (sqrt(v_hat) + eps_hat).
void AdamStep(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
              AdamState& state, const AdamParams& params);

// Adam over a matrix whose columns are updated independently: each column
// has its own step counter, so columns outside a batch keep their moments.
class ColumnAdam {
 public:
  ColumnAdam(Eigen::Index rows, Eigen::Index cols, AdamParams params);

  // grad.col(i) is the gradient of param.col(cols[i]).
  void Step(Eigen::MatrixXd& param, std::span<const std::size_t> cols,
            const Eigen::MatrixXd& grad);

 private:
  AdamParams params_;
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
  std::vector<std::int64_t> steps_;
};

// R (N x K), A (K x M) and their column-wise softmax images.
class DictionaryModel {
 public:
  DictionaryModel() = default;
  DictionaryModel(Eigen::MatrixXd r, Eigen::MatrixXd a);

  const Eigen::MatrixXd& r() const { return r_; }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& topics() const { return topics_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

  Eigen::Index num_words() const { return r_.rows(); }
  Eigen::Index num_topics() const { return r_.cols(); }
  Eigen::Index num_docs() const { return a_.cols(); }

  void SetR(Eigen::MatrixXd r);
  void SetA(Eigen::MatrixXd a);

 private:
  Eigen::MatrixXd r_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd topics_;
  Eigen::MatrixXd weights_;
};

struct BatchResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_r;  // N x K
  Eigen::MatrixXd grad_a;  // K x s
  Eigen::MatrixXd log_reconstruction;  // N x s
};

// Sum over the batch of loss(y_m, barycenter(T, lambda_m)) with gradients
// with respect to R and the batch's columns of A. Columns are processed in
// fixed-size chunks (possibly in parallel) and reduced in column order.
BatchResult BatchLossAndGrads(const Eigen::MatrixXd& y_batch,
                              const Eigen::MatrixXd& r,
                              const Eigen::MatrixXd& a_batch,
                              const transport::GibbsKernel& kernel,
                              int unroll_iters, LossKind kind, int threads = 1);

// Forward-only counterpart: the summed loss over the columns of y.
double BatchLoss(const Eigen::MatrixXd& y, const Eigen::MatrixXd& r,
                 const Eigen::MatrixXd& a, const transport::GibbsKernel& kernel,
                 int unroll_iters, LossKind kind, int threads = 1);

struct LossRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = std::numeric_limits<double>::quiet_NaN();
};

struct HeldoutResult {
  Eigen::MatrixXd a;        // K x M_test
  Eigen::MatrixXd weights;  // softmax(a)
  double mean_loss = 0.0;
};

// Fits only the weights of `y_test` with the topics frozen: `passes` Adam
// sweeps in batches of cfg.batch_size, in document order. Starts from
// `warm_start` when given, otherwise from A = 0 (uniform weights), so equal
// documents receive equal weights.
HeldoutResult FitHeldoutWeights(const Eigen::MatrixXd& y_test,
                                const Eigen::MatrixXd& r,
                                const transport::GibbsKernel& kernel,
                                const TrainConfig& cfg,
                                const transport::SinkhornConfig& scfg,
                                int passes,
                                const Eigen::MatrixXd* warm_start = nullptr);

struct TrainResult {
  // A covers the training documents only, in `train_docs` order.
  DictionaryModel model;
  std::vector<LossRecord> trace;
  std::vector<std::size_t> train_docs;
  std::vector<std::size_t> heldout_docs;
  HeldoutResult heldout;
  bool early_stopped = false;
};

// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const LossRecord&)>;

// Minibatch Adam on the columns of `y` (N x M, column-stochastic).
TrainResult Train(const Eigen::MatrixXd& y, const CostMatrix& cost,
                  const TrainConfig& cfg, const transport::SinkhornConfig& scfg,
                  const EpochCallback& on_epoch = {});

// Deterministic split used by Train: sorted heldout and training positions.
void SplitHoldout(std::size_t num_docs, double fraction, std::uint64_t seed,
                  std::vector<std::size_t>& train, std::vector<std::size_t>& heldout);

// Checkpoint: magic "WIGCKPT1", u64 N, u64 K, u64 M, u64 config byte length,
// the config echo text, then R and A as row-major little-endian f64.
struct Checkpoint {
  DictionaryModel model;
  std::string config_echo;
};

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint ReadCheckpoint(std::istream& in);

// "epoch,train_loss,heldout_loss" with an empty heldout field when absent.
void WriteLossTrace(std::ostream& out, std::span<const LossRecord> trace);

}  // namespace wig::training

#endif  // WIG_TRAINING_H_
