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

// Skip-gram word embeddings with negative sampling, and the squared-Euclidean
// ground cost derived from them.

#ifndef WIG_EMBEDDING_H_
#define WIG_EMBEDDING_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wig/corpus.h"
#include "wig/cost_matrix.h"

namespace wig::embedding {

struct EmbedConfig {
  int depth = 10;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  // Linearly decayed to 1e-4 of its initial value over training.
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void Validate() const;
};

// N x D word vectors, one row per vocabulary entry.
struct EmbeddingMatrix {
  Eigen::MatrixXd vectors;

  Eigen::Index depth() const { return vectors.cols(); }
};

// Both parameter blocks of the skip-gram model. `input` is what gets
// exported as the embedding.
struct SkipGramModel {
  Eigen::MatrixXd input;
  Eigen::MatrixXd output;
};

// Called after every epoch (1-based) with the current parameters.
using EpochObserver = std::function<void(int epoch, const SkipGramModel&)>;

// Single-threaded and deterministic given cfg.seed. Out-of-vocabulary tokens
// are skipped. Throws kEmptyCorpus when no document holds a vocabulary token.
EmbeddingMatrix TrainEmbeddings(std::span<const corpus::TokenList> docs,
                                const corpus::Vocabulary& vocab,
                                const EmbedConfig& cfg,
                                const EpochObserver& observer = {});

// A (center, context) pair with its negatives frozen, so the objective can be
// compared across epochs.
struct EvalPair {
  int center;
  int context;
  std::vector<int> negatives;
};

std::vector<EvalPair> SampleEvalPairs(std::span<const corpus::TokenList> docs,
                                      const corpus::Vocabulary& vocab,
                                      const EmbedConfig& cfg, int count,
                                      std::uint64_t seed);

// Mean of -log s(x_c . o_u) - sum_n log s(-x_c . o_n) over the pairs.
double NegativeSamplingLoss(const SkipGramModel& model,
                            std::span<const EvalPair> pairs);

// C_ij = ||x_i - x_j||^2, computed once per unordered pair and mirrored.
CostMatrix ComputeCostMatrix(const EmbeddingMatrix& embedding);

struct NormalizedCost {
  CostMatrix cost;
  // The divisor that was applied; 1 when the median is not positive.
  double scale = 1.0;
};

// Divides C by its median off-diagonal entry.
NormalizedCost NormalizeByMedian(const CostMatrix& cost);

// Flat binary: 8-byte magic, u64 rows, u64 cols, row-major f64, little-endian.
inline constexpr std::string_view kEmbeddingMagic = "WIGEMB01";
inline constexpr std::string_view kCostMagic = "WIGCST01";

void WriteMatrixBinary(std::ostream& out, std::string_view magic,
                       const Eigen::MatrixXd& matrix);
Eigen::MatrixXd ReadMatrixBinary(std::istream& in, std::string_view magic);
void WriteMatrixCsv(std::ostream& out, const Eigen::MatrixXd& matrix);

}  // namespace wig::embedding

#endif  // WIG_EMBEDDING_H_
