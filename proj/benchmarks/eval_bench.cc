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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "wig/eval.h"

namespace wig::eval {
namespace {

Eigen::VectorXd RandomWalk(Eigen::Index n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(n);
  double level = 100.0;
  for (Eigen::Index i = 0; i < n; ++i) y[i] = (level += normal(rng));
  return y;
}

void BM_HpFilter(benchmark::State& state) {
  const Eigen::VectorXd y = RandomWalk(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(HpFilter(y, kMonthlyHpLambda).trend.data());
  }
}
BENCHMARK(BM_HpFilter)->Arg(400)->Arg(10000);

void BM_Spearman(benchmark::State& state) {
  const Eigen::VectorXd x = RandomWalk(state.range(0));
  const Eigen::VectorXd y = x.reverse();
  const std::span<const double> sx(x.data(), x.size()), sy(y.data(), y.size());
  for (auto _ : state) benchmark::DoNotOptimize(Spearman(sx, sy));
}
BENCHMARK(BM_Spearman)->Arg(400)->Arg(10000);

}  // namespace
}  // namespace wig::eval
