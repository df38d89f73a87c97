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

#include <benchmark/benchmark.h>

#include "wig/transport.h"

namespace wig::transport {
namespace {

Eigen::MatrixXd RandomCost(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd pts(n, 2);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = unif(rng);
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = (pts.row(i) - pts.row(j)).squaredNorm();
  }
  return c;
}

Eigen::VectorXd RandomHistogram(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = unif(rng);
  return v / v.sum();
}

void BM_KernelLogApply(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index cols = state.range(1);
  std::mt19937_64 rng(1);
  const GibbsKernel kernel(CostMatrix(RandomCost(n, rng)), 0.1);
  Eigen::MatrixXd in = Eigen::MatrixXd::Random(n, cols);
  for (auto _ : state) {
    const Eigen::MatrixXd out = kernel.LogApply(in);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * cols);
}
BENCHMARK(BM_KernelLogApply)->Args({30, 64})->Args({500, 64})->Args({500, 256});

void BM_SinkhornDistance(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  std::mt19937_64 rng(2);
  const CostMatrix cost(RandomCost(n, rng));
  const Histogram mu(RandomHistogram(n, rng));
  const Histogram nu(RandomHistogram(n, rng));
  SinkhornConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SinkhornDistance(mu, nu, cost, cfg).value);
  }
}
BENCHMARK(BM_SinkhornDistance)->Arg(8)->Arg(100);

void BM_BarycenterTape(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index k = 4;
  const Eigen::Index batch = 64;
  std::mt19937_64 rng(3);
  const GibbsKernel kernel(CostMatrix(RandomCost(n, rng)), 0.1);
  Eigen::MatrixXd log_topics(n, k);
  for (Eigen::Index j = 0; j < k; ++j) log_topics.col(j) = RandomHistogram(n, rng).array().log();
  Eigen::MatrixXd weights(k, batch);
  for (Eigen::Index j = 0; j < batch; ++j) weights.col(j) = RandomHistogram(k, rng);
  for (auto _ : state) {
    BarycenterTape tape(kernel, 50);
    const Eigen::MatrixXd& log_b = tape.Forward(log_topics, weights);
    benchmark::DoNotOptimize(tape.Backward(Eigen::MatrixXd::Ones(n, batch) / n).weights.data());
    benchmark::DoNotOptimize(log_b.data());
  }
}
BENCHMARK(BM_BarycenterTape)->Arg(30)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace wig::transport
