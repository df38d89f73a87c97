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

// Seeded synthetic data for tests, benchmarks and demos.

#ifndef WIG_SYNTHETIC_H_
#define WIG_SYNTHETIC_H_

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "wig/calendar.h"
#include "wig/corpus.h"
#include "wig/cost_matrix.h"
#include "wig/index.h"
#include "wig/transport.h"

namespace wig::synthetic {

struct PlantedConfig {
  int words = 30;
  int topics = 3;
  int docs = 300;
  // Dimension of the standard-normal word positions.
  int dimension = 5;
  // Bump width in units of the square root of the median-normalized cost.
  double topic_width = 0.5;
  // Symmetric Dirichlet parameter of the document weights.
  double concentration = 1.0;
  std::uint64_t seed = 7;
};

// Words are standard-normal points; topic k is a Gaussian bump in cost
// around the k-th of `topics` mutually distant words (greedy farthest-point
// choice), and every document is the fixed-unroll barycenter of the topics
// under symmetric Dirichlet weights.
struct PlantedCorpus {
  CostMatrix cost;         // median-normalized
  Eigen::MatrixXd topics;  // N x K
  Eigen::MatrixXd weights; // K x M
  Eigen::MatrixXd docs;    // N x M
};

PlantedCorpus MakePlantedCorpus(const PlantedConfig& cfg,
                                const transport::SinkhornConfig& scfg);

// Mean total-variation distance between the columns of `truth` and
// `estimate` under the best column matching (exhaustive over permutations).
double MatchedTotalVariation(const Eigen::MatrixXd& truth,
                             const Eigen::MatrixXd& estimate);

struct HeadlineConfig {
  int docs = 2000;
  int vocabulary = 500;
  int months = 24;
  int themes = 4;
  int min_words = 5;
  int max_words = 9;
  Date start{std::chrono::year{2000}, std::chrono::month{1}, std::chrono::day{1}};
  std::uint64_t seed = 11;
};

// Dated headlines whose theme mix drifts month to month. Theme 0 is the
// "uncertainty" theme; its monthly share is returned as a reference series.
struct HeadlineCorpus {
  std::vector<corpus::RawDocument> docs;
  index::IndexSeries theme_share;
};

HeadlineCorpus MakeHeadlines(const HeadlineConfig& cfg);

// One JSON object per line with "date" and "text".
void WriteJsonLines(std::ostream& out, const std::vector<corpus::RawDocument>& docs);

}  // namespace wig::synthetic

#endif  // WIG_SYNTHETIC_H_
