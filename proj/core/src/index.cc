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

#include "wig/index.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/SVD>

#include "wig/error.h"
#include "wig/format.h"

namespace wig::index {

void CheckSeries(const IndexSeries& series) {
  if (series.months.size() != series.values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "series months and values differ in length");
  }
  for (std::size_t i = 1; i < series.months.size(); ++i) {
    if (!(series.months[i - 1] < series.months[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "series months not strictly increasing at " +
                      FormatMonth(series.months[i]));
    }
  }
}

SvdProjection SvdProject(const Eigen::MatrixXd& topics, bool flip) {
  if (topics.cols() < 1 || topics.rows() < 1 || !topics.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "topic matrix must be finite and non-empty");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(topics, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdProjection out;
  out.sigma = svd.singularValues()[0];
  if (!(out.sigma > 0.0)) {
    throw Error(ErrorCode::kDegenerateSvd, "leading singular value is zero");
  }
  out.u = svd.matrixU().col(0);
  out.t_hat = out.sigma * svd.matrixV().col(0);
  const bool negate = (out.t_hat.sum() < 0.0) != flip;
  if (negate) {
    out.u = -out.u;
    out.t_hat = -out.t_hat;
  }
  return out;
}

Eigen::VectorXd DocumentScores(const Eigen::VectorXd& t_hat,
                               const Eigen::MatrixXd& weights) {
  if (weights.rows() != t_hat.size()) {
    throw Error(ErrorCode::kInvalidArgument, "t_hat and weights disagree on K");
  }
  return weights.transpose() * t_hat;
}

IndexSeries AggregateMonthly(std::span<const double> scores,
                             std::span<const Date> dates, bool mean) {
  if (scores.size() != dates.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and dates differ in length");
  }
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no documents to aggregate");
  // Summation order within a month follows date, then score, so the result
  // does not depend on the order documents arrive in.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dates[a] != dates[b]) return dates[a] < dates[b];
    return scores[a] < scores[b];
  });
  IndexSeries out;
  std::size_t count = 0;
  for (std::size_t i : order) {
    const Month m = MonthOf(dates[i]);
    if (out.months.empty() || out.months.back() != m) {
      if (mean && count > 0) out.values.back() /= static_cast<double>(count);
      out.months.push_back(m);
      out.values.push_back(0.0);
      count = 0;
    }
    out.values.back() += scores[i];
    ++count;
  }
  if (mean) out.values.back() /= static_cast<double>(count);
  return out;
}

IndexSeries ScaleIndex(const IndexSeries& raw) {
  CheckSeries(raw);
  const std::size_t n = raw.size();
  if (n < 2) throw Error(ErrorCode::kSeriesTooShort, "scaling needs at least 2 points");
  // Plain loops: vectorized reductions over unaligned storage would make the
  // summation order depend on the allocation address.
  double mean = 0.0;
  double max_abs = 0.0;
  for (double x : raw.values) {
    mean += x;
    max_abs = std::max(max_abs, std::abs(x));
  }
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = raw.values[i] - mean;
    ss += centered[i] * centered[i];
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!std::isfinite(sd) || sd <= 1e-12 * max_abs) {
    throw Error(ErrorCode::kZeroVariance, "index series is constant");
  }
  IndexSeries out;
  out.months = raw.months;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = centered[i] / sd + 100.0;
  }
  return out;
}

void WriteIndexCsv(std::ostream& out, const IndexSeries& series) {
  CheckSeries(series);
  out << "month,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << FormatMonth(series.months[i]) << ',' << FormatDouble(series.values[i]) << '\n';
  }
}

IndexSeries ReadIndexCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "empty series file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "month,value") {
    throw Error(ErrorCode::kParse, "expected header 'month,value', got '" + line + "'");
  }
  IndexSeries out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(lineno) + ": missing comma");
    }
    out.months.push_back(ParseMonth(std::string_view(line).substr(0, comma)));
    out.values.push_back(ParseDouble(std::string_view(line).substr(comma + 1)));
  }
  try {
    CheckSeries(out);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return out;
}

void WriteTopicReport(std::ostream& out, const Eigen::MatrixXd& topics,
                      const corpus::Vocabulary& vocab, int top) {
  if (static_cast<std::size_t>(topics.rows()) != vocab.size()) {
    throw Error(ErrorCode::kInvalidArgument, "topic rows do not match the vocabulary");
  }
  out << "topic,rank,token,weight\n";
  const auto n = static_cast<std::size_t>(topics.rows());
  const std::size_t keep = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(top, 0)));
  std::vector<std::size_t> order(n);
  for (Eigen::Index k = 0; k < topics.cols(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return topics(static_cast<Eigen::Index>(a), k) > topics(static_cast<Eigen::Index>(b), k);
    });
    for (std::size_t r = 0; r < keep; ++r) {
      out << k + 1 << ',' << r + 1 << ',' << vocab.token(order[r]) << ','
          << FormatDouble(topics(static_cast<Eigen::Index>(order[r]), k)) << '\n';
    }
  }
}

}  // namespace wig::index
