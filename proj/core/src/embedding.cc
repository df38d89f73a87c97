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

#include "wig/embedding.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "binary_io.h"
#include "wig/error.h"
#include "wig/format.h"

namespace wig::embedding {
namespace {

using Sequence = std::vector<int>;

std::vector<Sequence> ToSequences(std::span<const corpus::TokenList> docs,
                                  const corpus::Vocabulary& vocab) {
  std::vector<Sequence> seqs;
  seqs.reserve(docs.size());
  for (const auto& doc : docs) {
    Sequence seq;
    for (const auto& token : doc) {
      if (auto id = vocab.Find(token)) seq.push_back(static_cast<int>(*id));
    }
    if (!seq.empty()) seqs.push_back(std::move(seq));
  }
  return seqs;
}

// Cumulative unigram^(3/4) weights; sampling is a binary search on a uniform
// draw. Words never seen in the corpus get zero weight.
class NegativeTable {
 public:
  NegativeTable(const std::vector<Sequence>& seqs, std::size_t vocab_size)
      : cumulative_(vocab_size, 0.0) {
    std::vector<double> counts(vocab_size, 0.0);
    for (const auto& seq : seqs) {
      for (const int w : seq) counts[static_cast<std::size_t>(w)] += 1.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < vocab_size; ++i) {
      acc += std::pow(counts[i], 0.75);
      cumulative_[i] = acc;
    }
  }

  int Sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
    const double r = unif(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    const auto idx = std::min<std::ptrdiff_t>(
        it - cumulative_.begin(), static_cast<std::ptrdiff_t>(cumulative_.size()) - 1);
    return static_cast<int>(idx);
  }

 private:
  std::vector<double> cumulative_;
};

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow for large |x|.
double LogSigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

void EmbedConfig::Validate() const {
  if (depth < 1 || window < 1 || negatives < 1 || epochs < 1 ||
      !(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding config: depth, window, negatives, epochs and "
                "learning rate must be positive");
  }
}

EmbeddingMatrix TrainEmbeddings(std::span<const corpus::TokenList> docs,
                                const corpus::Vocabulary& vocab,
                                const EmbedConfig& cfg,
                                const EpochObserver& observer) {
  cfg.Validate();
  const auto seqs = ToSequences(docs, vocab);
  if (seqs.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no in-vocabulary tokens to embed");
  }
  const auto n = static_cast<Eigen::Index>(vocab.size());
  const Eigen::Index d = cfg.depth;

  std::mt19937_64 rng(cfg.seed);
  SkipGramModel model;
  model.input.resize(n, d);
  std::uniform_real_distribution<double> init(-0.5 / d, 0.5 / d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) model.input(i, k) = init(rng);
  }
  model.output = Eigen::MatrixXd::Zero(n, d);

  const NegativeTable table(seqs, vocab.size());
  std::uint64_t corpus_words = 0;
  for (const auto& seq : seqs) corpus_words += seq.size();
  const double total_words = static_cast<double>(corpus_words) * cfg.epochs;
  double processed = 0.0;

  Eigen::VectorXd grad_center(d);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (const auto& seq : seqs) {
      const auto len = static_cast<int>(seq.size());
      for (int pos = 0; pos < len; ++pos) {
        const double lr =
            cfg.learning_rate * std::max(1e-4, 1.0 - processed / (total_words + 1.0));
        processed += 1.0;
        const int center = seq[static_cast<std::size_t>(pos)];
        // Reduced window as in the reference word2vec trainer.
        const int span = cfg.window - static_cast<int>(rng() % cfg.window);
        for (int off = -span; off <= span; ++off) {
          const int ctx_pos = pos + off;
          if (off == 0 || ctx_pos < 0 || ctx_pos >= len) continue;
          const int context = seq[static_cast<std::size_t>(ctx_pos)];
          grad_center.setZero();
          for (int s = 0; s <= cfg.negatives; ++s) {
            int target = context;
            double label = 1.0;
            if (s > 0) {
              target = table.Sample(rng);
              if (target == context) continue;
              label = 0.0;
            }
            const double f = model.input.row(center).dot(model.output.row(target));
            const double g = (label - Sigmoid(f)) * lr;
            grad_center += g * model.output.row(target).transpose();
            model.output.row(target) += g * model.input.row(center);
          }
          model.input.row(center) += grad_center.transpose();
        }
      }
    }
    if (observer) observer(epoch, model);
  }
  if (!model.input.allFinite()) {
    throw Error(ErrorCode::kNumericalCollapse, "embedding training diverged");
  }
  return EmbeddingMatrix{std::move(model.input)};
}

std::vector<EvalPair> SampleEvalPairs(std::span<const corpus::TokenList> docs,
                                      const corpus::Vocabulary& vocab,
                                      const EmbedConfig& cfg, int count,
                                      std::uint64_t seed) {
  const auto seqs = ToSequences(docs, vocab);
  std::vector<std::pair<int, int>> all;
  for (const auto& seq : seqs) {
    const auto len = static_cast<int>(seq.size());
    for (int pos = 0; pos < len; ++pos) {
      for (int off = -cfg.window; off <= cfg.window; ++off) {
        const int c = pos + off;
        if (off == 0 || c < 0 || c >= len) continue;
        all.emplace_back(seq[static_cast<std::size_t>(pos)],
                         seq[static_cast<std::size_t>(c)]);
      }
    }
  }
  std::vector<EvalPair> pairs;
  if (all.empty()) return pairs;
  std::mt19937_64 rng(seed);
  const NegativeTable table(seqs, vocab.size());
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  for (int i = 0; i < count; ++i) {
    const auto [center, context] = all[pick(rng)];
    EvalPair p{center, context, {}};
    for (int attempt = 0; attempt < 100 * cfg.negatives &&
                          static_cast<int>(p.negatives.size()) < cfg.negatives;
         ++attempt) {
      const int t = table.Sample(rng);
      if (t != context) p.negatives.push_back(t);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

double NegativeSamplingLoss(const SkipGramModel& model,
                            std::span<const EvalPair> pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pairs) {
    const auto x = model.input.row(p.center);
    total -= LogSigmoid(x.dot(model.output.row(p.context)));
    for (const int neg : p.negatives) {
      total -= LogSigmoid(-x.dot(model.output.row(neg)));
    }
  }
  return total / static_cast<double>(pairs.size());
}

CostMatrix ComputeCostMatrix(const EmbeddingMatrix& embedding) {
  const auto& x = embedding.vectors;
  if (!x.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding has non-finite entries");
  }
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return CostMatrix(std::move(c));
}

NormalizedCost NormalizeByMedian(const CostMatrix& cost) {
  const double median = cost.MedianOffDiagonal();
  if (!(median > 0.0)) return {cost, 1.0};
  return {CostMatrix(cost.entries() / median), median};
}

void WriteMatrixBinary(std::ostream& out, std::string_view magic,
                       const Eigen::MatrixXd& matrix) {
  internal::WriteMagic(out, magic);
  internal::WriteLE<std::uint64_t>(out, static_cast<std::uint64_t>(matrix.rows()));
  internal::WriteLE<std::uint64_t>(out, static_cast<std::uint64_t>(matrix.cols()));
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      internal::WriteF64(out, matrix(i, j));
    }
  }
}

Eigen::MatrixXd ReadMatrixBinary(std::istream& in, std::string_view magic) {
  internal::ExpectMagic(in, magic);
  const auto rows = internal::ReadLE<std::uint64_t>(in);
  const auto cols = internal::ReadLE<std::uint64_t>(in);
  if (rows > (1ULL << 31) || cols > (1ULL << 31)) {
    throw Error(ErrorCode::kParse, "implausible matrix shape");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = internal::ReadF64(in);
  }
  return m;
}

void WriteMatrixCsv(std::ostream& out, const Eigen::MatrixXd& matrix) {
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out << ',';
      out << FormatDouble(matrix(i, j));
    }
    out << '\n';
  }
}

}  // namespace wig::embedding
