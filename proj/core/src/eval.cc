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

#include "wig/eval.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wig/error.h"
#include "wig/format.h"

namespace wig::eval {
namespace {

constexpr std::array<double, 3> kSecondDiff = {1.0, -2.0, 1.0};

// Lower Cholesky factor of the pentadiagonal matrix I + lambda D'D, stored
// by band: l(i, d) = L(i, i - d).
Eigen::MatrixX3d FactorHp(Eigen::Index n, double lambda) {
  Eigen::MatrixX3d a = Eigen::MatrixX3d::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) a(i, 0) = 1.0;
  for (Eigen::Index r = 0; r + 2 < n; ++r) {
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q <= p; ++q) a(r + p, p - q) += lambda * kSecondDiff[p] * kSecondDiff[q];
    }
  }
  Eigen::MatrixX3d l = Eigen::MatrixX3d::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - 2); j <= i; ++j) {
      double s = a(i, i - j);
      for (Eigen::Index k = std::max<Eigen::Index>(0, i - 2); k < j; ++k) {
        s -= l(i, i - k) * l(j, j - k);
      }
      if (i == j) {
        if (!(s > 0.0)) throw Error(ErrorCode::kNumericalCollapse, "HP system not positive definite");
        l(i, 0) = std::sqrt(s);
      } else {
        l(i, i - j) = s / l(j, 0);
      }
    }
  }
  return l;
}

Eigen::VectorXd SolveFactored(const Eigen::MatrixX3d& l, const Eigen::VectorXd& b) {
  const Eigen::Index n = b.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = b[i];
    for (Eigen::Index d = 1; d <= std::min<Eigen::Index>(2, i); ++d) s -= l(i, d) * z[i - d];
    z[i] = s / l(i, 0);
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (Eigen::Index d = 1; d <= 2 && i + d < n; ++d) s -= l(i + d, d) * x[i + d];
    x[i] = s / l(i, 0);
  }
  return x;
}

void CheckPair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "correlation arguments differ in length");
  }
  if (x.size() < 2) throw Error(ErrorCode::kSeriesTooShort, "correlation needs 2 points");
}

std::span<const double> AsSpan(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

Eigen::VectorXd HpApply(const Eigen::VectorXd& x, double lambda) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd out = x;
  for (Eigen::Index r = 0; r + 2 < n; ++r) {
    const double d = x[r] - 2.0 * x[r + 1] + x[r + 2];
    for (int p = 0; p < 3; ++p) out[r + p] += lambda * kSecondDiff[p] * d;
  }
  return out;
}

HpResult HpFilter(const Eigen::VectorXd& y, double lambda) {
  if (y.size() < 4) throw Error(ErrorCode::kSeriesTooShort, "HP filter needs at least 4 points");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "HP lambda must be positive and finite");
  }
  if (!y.allFinite()) throw Error(ErrorCode::kInvalidArgument, "HP input must be finite");
  const Eigen::MatrixX3d l = FactorHp(y.size(), lambda);
  HpResult out;
  out.trend = SolveFactored(l, y);
  out.trend += SolveFactored(l, y - HpApply(out.trend, lambda));
  out.cycle = y - out.trend;
  return out;
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  CheckPair(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::kZeroVariance, "correlation of a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  CheckPair(x, y);
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  return Pearson(rx, ry);
}

index::IndexSeries CumulativeDifference(const index::IndexSeries& a,
                                        const index::IndexSeries& b,
                                        bool signed_diff) {
  index::CheckSeries(a);
  index::CheckSeries(b);
  index::IndexSeries out;
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a.months[i] < b.months[j]) {
      ++i;
    } else if (b.months[j] < a.months[i]) {
      ++j;
    } else {
      const double d = a.values[i] - b.values[j];
      total += signed_diff ? d : std::abs(d);
      out.months.push_back(a.months[i]);
      out.values.push_back(total);
      ++i;
      ++j;
    }
  }
  if (out.months.empty()) throw Error(ErrorCode::kNoOverlap, "series share no months");
  return out;
}

EvalReport Evaluate(const index::IndexSeries& series,
                    const index::IndexSeries& reference, double hp_lambda,
                    bool signed_diff) {
  EvalReport report;
  report.hp_lambda = hp_lambda;
  report.cumdiff = CumulativeDifference(series, reference, signed_diff);
  report.common_months = report.cumdiff.size();
  if (report.common_months < kMinCommonMonths) {
    throw Error(ErrorCode::kInsufficientOverlap,
                std::to_string(report.common_months) + " common months, need " +
                    std::to_string(kMinCommonMonths));
  }
  const auto n = static_cast<Eigen::Index>(report.common_months);
  Eigen::VectorXd x(n), y(n);
  Eigen::Index k = 0;
  std::size_t i = 0, j = 0;
  while (i < series.size() && j < reference.size()) {
    if (series.months[i] < reference.months[j]) {
      ++i;
    } else if (reference.months[j] < series.months[i]) {
      ++j;
    } else {
      x[k] = series.values[i++];
      y[k++] = reference.values[j++];
    }
  }
  const HpResult hx = HpFilter(x, hp_lambda);
  const HpResult hy = HpFilter(y, hp_lambda);
  report.pearson = {Pearson(AsSpan(x), AsSpan(y)), Pearson(AsSpan(hx.trend), AsSpan(hy.trend)),
                    Pearson(AsSpan(hx.cycle), AsSpan(hy.cycle))};
  report.spearman = {Spearman(AsSpan(x), AsSpan(y)),
                     Spearman(AsSpan(hx.trend), AsSpan(hy.trend)),
                     Spearman(AsSpan(hx.cycle), AsSpan(hy.cycle))};
  return report;
}

void WriteReportCsv(std::ostream& out, const EvalReport& r) {
  out << "metric,value\n"
      << "pearson_raw," << FormatDouble(r.pearson.raw) << '\n'
      << "pearson_trend," << FormatDouble(r.pearson.trend) << '\n'
      << "pearson_cycle," << FormatDouble(r.pearson.cycle) << '\n'
      << "spearman_raw," << FormatDouble(r.spearman.raw) << '\n'
      << "spearman_trend," << FormatDouble(r.spearman.trend) << '\n'
      << "spearman_cycle," << FormatDouble(r.spearman.cycle) << '\n'
      << "hp_lambda," << FormatDouble(r.hp_lambda) << '\n'
      << "common_months," << r.common_months << '\n';
}

namespace {

struct Panel {
  double top;
  double height;
};

constexpr double kWidth = 800.0;
constexpr double kMargin = 50.0;

std::string Polyline(const index::IndexSeries& s, const std::vector<Month>& axis,
                     double lo, double hi, const Panel& p, const char* color) {
  std::ostringstream out;
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
  const double span = hi > lo ? hi - lo : 1.0;
  const double step = axis.size() > 1 ? (kWidth - 2 * kMargin) / double(axis.size() - 1) : 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto pos = std::lower_bound(axis.begin(), axis.end(), s.months[i]) - axis.begin();
    const double px = kMargin + step * static_cast<double>(pos);
    const double py = p.top + p.height * (1.0 - (s.values[i] - lo) / span);
    out << (i ? " " : "") << FormatDouble(std::round(px * 100) / 100) << ','
        << FormatDouble(std::round(py * 100) / 100);
  }
  out << "\"/>\n";
  return out.str();
}

}  // namespace

void WritePlotSvg(std::ostream& out, const index::IndexSeries& series,
                  const index::IndexSeries& reference,
                  const index::IndexSeries& cumdiff) {
  std::vector<Month> axis = series.months;
  axis.insert(axis.end(), reference.months.begin(), reference.months.end());
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  auto range = [](std::initializer_list<const index::IndexSeries*> all) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto* s : all) {
      for (double v : s->values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    return std::pair{lo, hi};
  };
  const auto [lo1, hi1] = range({&series, &reference});
  const auto [lo2, hi2] = range({&cumdiff});
  const Panel top{30.0, 250.0};
  const Panel bottom{340.0, 200.0};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"580\">\n"
      << "<rect width=\"800\" height=\"580\" fill=\"white\"/>\n"
      << "<text x=\"50\" y=\"20\" font-size=\"14\">index (blue) vs reference (red)</text>\n"
      << "<text x=\"50\" y=\"330\" font-size=\"14\">cumulative difference</text>\n";
  if (!axis.empty()) {
    out << "<text x=\"50\" y=\"570\" font-size=\"12\">" << FormatMonth(axis.front())
        << "</text>\n<text x=\"700\" y=\"570\" font-size=\"12\">" << FormatMonth(axis.back())
        << "</text>\n";
  }
  out << Polyline(series, axis, lo1, hi1, top, "blue")
      << Polyline(reference, axis, lo1, hi1, top, "red")
      << Polyline(cumdiff, axis, lo2, hi2, bottom, "black") << "</svg>\n";
}

}  // namespace wig::eval
