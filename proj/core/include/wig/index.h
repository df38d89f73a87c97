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

// From topics to a monthly index: one-component SVD of the topic matrix,
// per-document scores, monthly aggregation and standardization.

#ifndef WIG_INDEX_H_
#define WIG_INDEX_H_

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wig/calendar.h"
#include "wig/corpus.h"

namespace wig::index {

// Months strictly increasing; gaps allowed.
struct IndexSeries {
  std::vector<Month> months;
  std::vector<double> values;

  std::size_t size() const { return months.size(); }
  bool operator==(const IndexSeries&) const = default;
};

// Throws kInvalidArgument unless months are strictly increasing and the
// lengths agree.
void CheckSeries(const IndexSeries& series);

struct SvdProjection {
  Eigen::VectorXd t_hat;  // sigma_1 * v_1, length K
  Eigen::VectorXd u;      // leading left singular vector, length N
  double sigma = 0.0;
};

// Leading singular triple of T (N x K), sign fixed so that sum(t_hat) >= 0,
// then negated when `flip` is set. Throws kDegenerateSvd if sigma_1 == 0.
SvdProjection SvdProject(const Eigen::MatrixXd& topics, bool flip = false);

// scores_m = sum_k t_hat_k * weights(k, m).
Eigen::VectorXd DocumentScores(const Eigen::VectorXd& t_hat,
                               const Eigen::MatrixXd& weights);

// Sums (or averages, with `mean`) scores per calendar month. Months without
// documents are absent. Throws kEmptyInput for no documents.
IndexSeries AggregateMonthly(std::span<const double> scores,
                             std::span<const Date> dates, bool mean = false);

// (v - mean) / sd + 100 with the sample standard deviation. Throws
// kZeroVariance for a constant series and kSeriesTooShort below 2 points.
IndexSeries ScaleIndex(const IndexSeries& raw);

// "month,value" with months as YYYY-MM.
void WriteIndexCsv(std::ostream& out, const IndexSeries& series);
IndexSeries ReadIndexCsv(std::istream& in);

// "topic,rank,token,weight": the `top` heaviest tokens of each topic column.
void WriteTopicReport(std::ostream& out, const Eigen::MatrixXd& topics,
                      const corpus::Vocabulary& vocab, int top = 20);

}  // namespace wig::index

#endif  // WIG_INDEX_H_
