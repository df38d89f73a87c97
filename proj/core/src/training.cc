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

#include "wig/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "binary_io.h"
#include "wig/error.h"
#include "wig/format.h"
#include "wig/parallel.h"

namespace wig::training {
namespace {

constexpr std::string_view kCheckpointMagic = "WIGCKPT1";
// Columns per barycenter tape. Fixed so that the floating-point reduction
// order, and hence every result bit, is independent of the thread count.
constexpr Eigen::Index kChunkColumns = 32;

Eigen::MatrixXd GatherColumns(const Eigen::MatrixXd& m,
                              std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(cols[i]));
  }
  return out;
}

struct ChunkOutput {
  Eigen::VectorXd losses;
  Eigen::MatrixXd grad_log_topics;
  Eigen::MatrixXd grad_weights;
  Eigen::MatrixXd log_reconstruction;
};

std::vector<ChunkOutput> RunChunks(const Eigen::MatrixXd& y,
                                   const Eigen::MatrixXd& log_topics,
                                   const Eigen::MatrixXd& weights,
                                   const transport::GibbsKernel& kernel,
                                   int unroll_iters, LossKind kind, int threads,
                                   bool backward) {
  const Eigen::Index s = y.cols();
  const auto chunks = static_cast<std::size_t>((s + kChunkColumns - 1) / kChunkColumns);
  std::vector<ChunkOutput> out(chunks);
  ParallelFor(chunks, threads, [&](std::size_t ci) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(ci) * kChunkColumns;
    const Eigen::Index width = std::min(kChunkColumns, s - c0);
    transport::BarycenterTape tape(kernel, unroll_iters);
    const Eigen::MatrixXd& log_b =
        tape.Forward(log_topics, weights.middleCols(c0, width));
    ChunkOutput& o = out[ci];
    o.losses.resize(width);
    Eigen::MatrixXd grad(log_b.rows(), width);
    for (Eigen::Index c = 0; c < width; ++c) {
      Eigen::VectorXd g;
      o.losses[c] = ReconstructionLossFromLog(y.col(c0 + c), log_b.col(c), kind,
                                              backward ? &g : nullptr);
      if (backward) grad.col(c) = g;
    }
    o.log_reconstruction = log_b;
    if (backward) {
      auto grads = tape.Backward(grad);
      o.grad_log_topics = std::move(grads.log_topics);
      o.grad_weights = std::move(grads.weights);
    }
  });
  return out;
}

void WriteDiagnostics(const std::string& path, const Eigen::MatrixXd& r,
                      const Eigen::MatrixXd& a, std::span<const std::size_t> batch,
                      int epoch) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return;
  out << "epoch=" << epoch << "\nbatch=";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << (i ? "," : "") << batch[i];
  }
  const Eigen::IOFormat csv(Eigen::FullPrecision, 0, ",", "\n");
  out << "\n[R]\n" << r.format(csv) << "\n[A]\n" << a.format(csv) << "\n";
}

}  // namespace

LossKind ParseLossKind(std::string_view name) {
  if (name == "kl") return LossKind::kKl;
  if (name == "l2") return LossKind::kL2;
  throw Error(ErrorCode::kInvalidArgument,
              "loss must be 'kl' or 'l2', got '" + std::string(name) + "'");
}

std::string_view LossKindName(LossKind kind) {
  return kind == LossKind::kKl ? "kl" : "l2";
}

void TrainConfig::Validate() const {
  if (topics < 1) throw Error(ErrorCode::kInvalidArgument, "topics must be >= 1");
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(eps_hat > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "Adam needs 0 <= beta1, beta2 < 1 and eps_hat > 0");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "holdout fraction must be in [0, 1)");
  }
  if (early_stop_patience < 0 || heldout_passes < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "early-stop patience must be >= 0 and heldout passes >= 1");
  }
}

Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double mx = p.col(c).maxCoeff();
    out.col(c) = (p.col(c).array() - mx).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

Eigen::MatrixXd LogSoftmaxColumns(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double mx = p.col(c).maxCoeff();
    const double lse = mx + std::log((p.col(c).array() - mx).exp().sum());
    out.col(c) = (p.col(c).array() - lse).matrix();
  }
  return out;
}

double ReconstructionLoss(const transport::Histogram& y,
                          const transport::Histogram& y_hat, LossKind kind) {
  if (y.size() != y_hat.size()) {
    throw Error(ErrorCode::kInvalidArgument, "histogram sizes differ");
  }
  double loss = 0.0;
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    if (kind == LossKind::kL2) {
      const double d = y[n] - y_hat[n];
      loss += d * d;
    } else if (y[n] > 0.0) {
      if (!(y_hat[n] > 0.0)) {
        throw Error(ErrorCode::kDegenerateReconstruction,
                    "reconstruction vanishes on the document's support");
      }
      loss += y[n] * std::log(y[n] / y_hat[n]);
    }
  }
  return loss;
}

double ReconstructionLossFromLog(const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& log_y_hat,
                                 LossKind kind, Eigen::VectorXd* grad) {
  const Eigen::Index n = y.size();
  if (grad) grad->setZero(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (kind == LossKind::kL2) {
      const double yh = std::exp(log_y_hat[i]);
      const double d = y[i] - yh;
      loss += d * d;
      if (grad) (*grad)[i] = -2.0 * d * yh;
    } else if (y[i] != 0.0) {
      // Zero mass contributes nothing; NaN input propagates into the loss.
      if (log_y_hat[i] == -std::numeric_limits<double>::infinity()) {
        throw Error(ErrorCode::kDegenerateReconstruction,
                    "reconstruction vanishes on the document's support");
      }
      loss += y[i] * (std::log(y[i]) - log_y_hat[i]);
      if (grad) (*grad)[i] = -y[i];
    }
  }
  return loss;
}

AdamState AdamState::Zeros(Eigen::Index rows, Eigen::Index cols) {
  return {Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols), 0};
}

void AdamStep(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
              AdamState& state, const AdamParams& p) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "Adam shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(p.beta1, t);
  const double c2 = 1.0 - std::pow(p.beta2, t);
  state.m = p.beta1 * state.m + (1.0 - p.beta1) * grad;
  state.v = p.beta2 * state.v + (1.0 - p.beta2) * grad.cwiseAbs2();
  param.array() -= p.learning_rate * (state.m.array() / c1) /
                   ((state.v.array() / c2).sqrt() + p.eps_hat);
}

ColumnAdam::ColumnAdam(Eigen::Index rows, Eigen::Index cols, AdamParams params)
    : params_(params),
      m_(Eigen::MatrixXd::Zero(rows, cols)),
      v_(Eigen::MatrixXd::Zero(rows, cols)),
      steps_(static_cast<std::size_t>(cols), 0) {}

void ColumnAdam::Step(Eigen::MatrixXd& param, std::span<const std::size_t> cols,
                      const Eigen::MatrixXd& grad) {
  const auto& p = params_;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(cols[i]);
    const auto g = grad.col(static_cast<Eigen::Index>(i));
    const double t = static_cast<double>(++steps_[cols[i]]);
    const double c1 = 1.0 - std::pow(p.beta1, t);
    const double c2 = 1.0 - std::pow(p.beta2, t);
    m_.col(c) = p.beta1 * m_.col(c) + (1.0 - p.beta1) * g;
    v_.col(c) = p.beta2 * v_.col(c) + (1.0 - p.beta2) * g.cwiseAbs2();
    param.col(c).array() -= p.learning_rate * (m_.col(c).array() / c1) /
                            ((v_.col(c).array() / c2).sqrt() + p.eps_hat);
  }
}

DictionaryModel::DictionaryModel(Eigen::MatrixXd r, Eigen::MatrixXd a) {
  if (r.cols() < 1 || r.rows() < 1 || a.rows() != r.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "dictionary shape mismatch");
  }
  SetR(std::move(r));
  SetA(std::move(a));
}

void DictionaryModel::SetR(Eigen::MatrixXd r) {
  if (!r.allFinite()) throw Error(ErrorCode::kNonFiniteLoss, "non-finite R");
  r_ = std::move(r);
  topics_ = SoftmaxColumns(r_);
}

void DictionaryModel::SetA(Eigen::MatrixXd a) {
  if (!a.allFinite()) throw Error(ErrorCode::kNonFiniteLoss, "non-finite A");
  a_ = std::move(a);
  weights_ = SoftmaxColumns(a_);
}

BatchResult BatchLossAndGrads(const Eigen::MatrixXd& y_batch,
                              const Eigen::MatrixXd& r,
                              const Eigen::MatrixXd& a_batch,
                              const transport::GibbsKernel& kernel,
                              int unroll_iters, LossKind kind, int threads) {
  if (y_batch.rows() != r.rows() || a_batch.rows() != r.cols() ||
      a_batch.cols() != y_batch.cols() || r.rows() != kernel.size()) {
    throw Error(ErrorCode::kInvalidArgument, "batch shape mismatch");
  }
  const Eigen::MatrixXd log_topics = LogSoftmaxColumns(r);
  const Eigen::MatrixXd topics = log_topics.array().exp();
  const Eigen::MatrixXd weights = SoftmaxColumns(a_batch);
  const auto chunks = RunChunks(y_batch, log_topics, weights, kernel,
                                unroll_iters, kind, threads, true);

  const Eigen::Index k = r.cols();
  const Eigen::Index s = y_batch.cols();
  BatchResult res;
  Eigen::MatrixXd grad_log_topics = Eigen::MatrixXd::Zero(r.rows(), k);
  Eigen::MatrixXd grad_weights(k, s);
  res.log_reconstruction.resize(r.rows(), s);
  Eigen::Index col = 0;
  for (const auto& chunk : chunks) {
    for (Eigen::Index c = 0; c < chunk.losses.size(); ++c) res.loss += chunk.losses[c];
    grad_log_topics += chunk.grad_log_topics;
    const Eigen::Index width = chunk.grad_weights.cols();
    grad_weights.middleCols(col, width) = chunk.grad_weights;
    res.log_reconstruction.middleCols(col, width) = chunk.log_reconstruction;
    col += width;
  }

  // Chain rule through the column softmaxes.
  res.grad_r.resize(r.rows(), k);
  for (Eigen::Index t = 0; t < k; ++t) {
    res.grad_r.col(t) =
        grad_log_topics.col(t) - topics.col(t) * grad_log_topics.col(t).sum();
  }
  res.grad_a.resize(k, s);
  for (Eigen::Index c = 0; c < s; ++c) {
    const Eigen::VectorXd lam = weights.col(c);
    const double inner = lam.dot(grad_weights.col(c));
    res.grad_a.col(c) = lam.cwiseProduct(grad_weights.col(c).array().matrix() -
                                         Eigen::VectorXd::Constant(k, inner));
  }
  return res;
}

double BatchLoss(const Eigen::MatrixXd& y, const Eigen::MatrixXd& r,
                 const Eigen::MatrixXd& a, const transport::GibbsKernel& kernel,
                 int unroll_iters, LossKind kind, int threads) {
  if (y.rows() != r.rows() || a.rows() != r.cols() || a.cols() != y.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "batch shape mismatch");
  }
  const auto chunks = RunChunks(y, LogSoftmaxColumns(r), SoftmaxColumns(a), kernel,
                                unroll_iters, kind, threads, false);
  double loss = 0.0;
  for (const auto& chunk : chunks) {
    for (Eigen::Index c = 0; c < chunk.losses.size(); ++c) loss += chunk.losses[c];
  }
  return loss;
}

HeldoutResult FitHeldoutWeights(const Eigen::MatrixXd& y_test,
                                const Eigen::MatrixXd& r,
                                const transport::GibbsKernel& kernel,
                                const TrainConfig& cfg,
                                const transport::SinkhornConfig& scfg,
                                int passes, const Eigen::MatrixXd* warm_start) {
  cfg.Validate();
  scfg.Validate();
  const Eigen::Index k = r.cols();
  const Eigen::Index m = y_test.cols();
  HeldoutResult out;
  if (warm_start) {
    if (warm_start->rows() != k || warm_start->cols() != m) {
      throw Error(ErrorCode::kInvalidArgument, "warm start shape mismatch");
    }
    out.a = *warm_start;
  } else {
    out.a = Eigen::MatrixXd::Zero(k, m);
  }
  ColumnAdam adam(k, m, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps_hat});
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  std::vector<std::size_t> cols;
  for (int pass = 0; pass < passes; ++pass) {
    for (Eigen::Index start = 0; start < m; start += batch) {
      const Eigen::Index width = std::min(batch, m - start);
      cols.resize(static_cast<std::size_t>(width));
      std::iota(cols.begin(), cols.end(), static_cast<std::size_t>(start));
      const auto res = BatchLossAndGrads(y_test.middleCols(start, width), r,
                                         out.a.middleCols(start, width), kernel,
                                         scfg.unroll_iters, cfg.loss, cfg.threads);
      if (!std::isfinite(res.loss) || !res.grad_a.allFinite()) {
        throw Error(ErrorCode::kNonFiniteLoss, "non-finite heldout loss");
      }
      adam.Step(out.a, cols, res.grad_a);
    }
  }
  out.weights = SoftmaxColumns(out.a);
  out.mean_loss = m == 0 ? 0.0
                         : BatchLoss(y_test, r, out.a, kernel, scfg.unroll_iters,
                                     cfg.loss, cfg.threads) /
                               static_cast<double>(m);
  return out;
}

void SplitHoldout(std::size_t num_docs, double fraction, std::uint64_t seed,
                  std::vector<std::size_t>& train,
                  std::vector<std::size_t>& heldout) {
  std::vector<std::size_t> perm(num_docs);
  std::iota(perm.begin(), perm.end(), 0);
  auto count = static_cast<std::size_t>(std::llround(fraction * double(num_docs)));
  if (fraction > 0.0 && count == 0 && num_docs >= 2) count = 1;
  if (num_docs > 0 && count >= num_docs) count = num_docs - 1;
  std::seed_seq seq{seed, std::uint64_t{0x686f6c646f7574}};
  std::mt19937_64 rng(seq);
  std::shuffle(perm.begin(), perm.end(), rng);
  heldout.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
  train.assign(perm.begin() + static_cast<std::ptrdiff_t>(count), perm.end());
  std::sort(heldout.begin(), heldout.end());
  std::sort(train.begin(), train.end());
}

TrainResult Train(const Eigen::MatrixXd& y, const CostMatrix& cost,
                  const TrainConfig& cfg, const transport::SinkhornConfig& scfg,
                  const EpochCallback& on_epoch) {
  cfg.Validate();
  scfg.Validate();
  const Eigen::Index n = y.rows();
  if (n < 1 || y.cols() < 1) {
    throw Error(ErrorCode::kEmptyInput, "training needs N, M >= 1");
  }
  if (cost.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "cost matrix does not match N");
  }

  TrainResult result;
  SplitHoldout(static_cast<std::size_t>(y.cols()), cfg.holdout_fraction, cfg.seed,
               result.train_docs, result.heldout_docs);
  const Eigen::MatrixXd y_train = GatherColumns(y, result.train_docs);
  const Eigen::MatrixXd y_test = GatherColumns(y, result.heldout_docs);
  const Eigen::Index m = y_train.cols();
  const Eigen::Index k = cfg.topics;

  const transport::GibbsKernel kernel(cost, scfg.epsilon);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd r(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) r(i, j) = normal(rng);
  }
  Eigen::MatrixXd a(k, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) a(i, j) = normal(rng);
  }

  const AdamParams params{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps_hat};
  AdamState adam_r = AdamState::Zeros(n, k);
  ColumnAdam adam_a(k, m, params);

  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  int stall = 0;
  double prev_loss = 0.0;
  bool have_heldout = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> cols(order.data() + start, end - start);
      const auto res =
          BatchLossAndGrads(GatherColumns(y_train, cols), r, GatherColumns(a, cols),
                            kernel, scfg.unroll_iters, cfg.loss, cfg.threads);
      if (!std::isfinite(res.loss) || !res.grad_r.allFinite() ||
          !res.grad_a.allFinite()) {
        if (!cfg.diagnostics_path.empty()) {
          WriteDiagnostics(cfg.diagnostics_path, r, a, cols, epoch);
        }
        throw Error(ErrorCode::kNonFiniteLoss,
                    "epoch " + std::to_string(epoch) + ", batch starting at " +
                        std::to_string(start) + ": loss " +
                        FormatDouble(res.loss));
      }
      loss_sum += res.loss;
      AdamStep(r, res.grad_r, adam_r, params);
      adam_a.Step(a, cols, res.grad_a);
    }

    LossRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(m);
    if (y_test.cols() > 0) {
      result.heldout = FitHeldoutWeights(y_test, r, kernel, cfg, scfg,
                                         cfg.heldout_passes,
                                         have_heldout ? &result.heldout.a : nullptr);
      have_heldout = true;
      rec.heldout_loss = result.heldout.mean_loss;
    }
    result.trace.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;

    if (cfg.early_stop_patience > 0 && epoch > 1) {
      const double rel = (prev_loss - rec.train_loss) /
                         std::max(std::abs(prev_loss), 1e-300);
      stall = rel < cfg.early_stop_tol ? stall + 1 : 0;
      if (stall >= cfg.early_stop_patience) {
        result.early_stopped = true;
        prev_loss = rec.train_loss;
        break;
      }
    }
    prev_loss = rec.train_loss;
  }
  result.model = DictionaryModel(std::move(r), std::move(a));
  return result;
}

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& model = ckpt.model;
  internal::WriteMagic(out, kCheckpointMagic);
  internal::WriteLE<std::uint64_t>(out, static_cast<std::uint64_t>(model.num_words()));
  internal::WriteLE<std::uint64_t>(out, static_cast<std::uint64_t>(model.num_topics()));
  internal::WriteLE<std::uint64_t>(out, static_cast<std::uint64_t>(model.num_docs()));
  internal::WriteLE<std::uint64_t>(out, ckpt.config_echo.size());
  out.write(ckpt.config_echo.data(),
            static_cast<std::streamsize>(ckpt.config_echo.size()));
  for (const Eigen::MatrixXd* m : {&model.r(), &model.a()}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) internal::WriteF64(out, (*m)(i, j));
    }
  }
}

Checkpoint ReadCheckpoint(std::istream& in) {
  internal::ExpectMagic(in, kCheckpointMagic);
  const auto n = internal::ReadLE<std::uint64_t>(in);
  const auto k = internal::ReadLE<std::uint64_t>(in);
  const auto m = internal::ReadLE<std::uint64_t>(in);
  const auto len = internal::ReadLE<std::uint64_t>(in);
  if (n > (1ULL << 31) || k > (1ULL << 20) || m > (1ULL << 31) || len > (1ULL << 26)) {
    throw Error(ErrorCode::kParse, "implausible checkpoint header");
  }
  Checkpoint ckpt;
  ckpt.config_echo.resize(len);
  in.read(ckpt.config_echo.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(ErrorCode::kParse, "truncated checkpoint");
  Eigen::MatrixXd r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  Eigen::MatrixXd a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
  for (Eigen::MatrixXd* mat : {&r, &a}) {
    for (Eigen::Index i = 0; i < mat->rows(); ++i) {
      for (Eigen::Index j = 0; j < mat->cols(); ++j) (*mat)(i, j) = internal::ReadF64(in);
    }
  }
  ckpt.model = DictionaryModel(std::move(r), std::move(a));
  return ckpt;
}

void WriteLossTrace(std::ostream& out, std::span<const LossRecord> trace) {
  out << "epoch,train_loss,heldout_loss\n";
  for (const auto& rec : trace) {
    out << rec.epoch << ',' << FormatDouble(rec.train_loss) << ',';
    if (!std::isnan(rec.heldout_loss)) out << FormatDouble(rec.heldout_loss);
    out << '\n';
  }
}

}  // namespace wig::training
