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

#ifndef WIG_EVAL_H_
#define WIG_EVAL_H_

#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wig/index.h"

namespace wig::eval {

inline constexpr double kMonthlyHpLambda = 129600.0;
inline constexpr std::size_t kMinCommonMonths = 24;

struct HpResult {
  Eigen::VectorXd trend;
  Eigen::VectorXd cycle;  // series - trend
};

// Hodrick-Prescott filter: solves (I + lambda D'D) trend = y, D the second
// difference operator, with a banded Cholesky factorization and one step of
// iterative refinement. Throws kSeriesTooShort below 4 points.
HpResult HpFilter(const Eigen::VectorXd& y, double lambda);

// (I + lambda D'D) x, evaluated as x + lambda D'(D x).
Eigen::VectorXd HpApply(const Eigen::VectorXd& x, double lambda);

// Sample correlation, clamped to [-1, 1]. Throws kZeroVariance when either
// argument is constant.
double Pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
double Spearman(std::span<const double> x, std::span<const double> y);
// 1-based ranks; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> x);

// Running sum of |a - b| (or a - b when `signed_diff`) over the months the
// two series share. Throws kNoOverlap when they share none.
index::IndexSeries CumulativeDifference(const index::IndexSeries& a,
                                        const index::IndexSeries& b,
                                        bool signed_diff = false);

struct Correlations {
  double raw = 0.0;
  double trend = 0.0;
  double cycle = 0.0;
};

struct EvalReport {
  Correlations pearson;
  Correlations spearman;
  index::IndexSeries cumdiff;
  double hp_lambda = kMonthlyHpLambda;
  std::size_t common_months = 0;
};

// Aligns on common months, HP-filters both series and correlates raw, trend
// and cycle components. Throws kInsufficientOverlap below 24 common months.
EvalReport Evaluate(const index::IndexSeries& series,
                    const index::IndexSeries& reference,
                    double hp_lambda = kMonthlyHpLambda, bool signed_diff = false);

// "metric,value" rows: pearson_{raw,trend,cycle}, spearman_{raw,trend,cycle},
// hp_lambda, common_months.
void WriteReportCsv(std::ostream& out, const EvalReport& report);

// Two stacked line charts: series against reference, and the cumulative
// difference.
void WritePlotSvg(std::ostream& out, const index::IndexSeries& series,
                  const index::IndexSeries& reference,
                  const index::IndexSeries& cumdiff);

}  // namespace wig::eval

#endif  // WIG_EVAL_H_
