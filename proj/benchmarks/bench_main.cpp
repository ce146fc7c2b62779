//
// Copyright 2026 The privshift Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <benchmark/benchmark.h>

#include "privshift/core_model.hpp"
#include "privshift/estimators.hpp"
#include "privshift/privacy.hpp"
#include "privshift/random.hpp"

namespace privshift {
namespace {

DataMatrix MakeData(Eigen::Index m, Eigen::Index p) {
  Rng rng(1);
  const Eigen::MatrixXd x = StandardNormalMatrix(m, p, rng);
  const Eigen::VectorXd y = x.rowwise().sum() + StandardNormalMatrix(m, 1, rng);
  return DataMatrix::FromParts(y, x);
}

void BM_ComputeGram(benchmark::State& state) {
  const DataMatrix d = MakeData(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(ComputeGram(d));
}
BENCHMARK(BM_ComputeGram)->Args({1000, 10})->Args({10000, 50});

void BM_LooCorrelationSensitivity(benchmark::State& state) {
  const DataMatrix d = MakeData(state.range(0), state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(LooSensitivity(d, SensitivityBlock::Correlation()));
  }
}
BENCHMARK(BM_LooCorrelationSensitivity)->Args({1000, 10})->Args({1000, 50});

void BM_DpGramTransform(benchmark::State& state) {
  const DataMatrix d = MakeData(state.range(0), state.range(1));
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(DpGramTransform(d, PrivacyBudget(1.0, 1e-5), rng));
  }
}
BENCHMARK(BM_DpGramTransform)->Args({1000, 10})->Args({1000, 50});

void BM_CalibrationWeights(benchmark::State& state) {
  Rng rng(3);
  const Eigen::MatrixXd g = StandardNormalMatrix(state.range(0), state.range(1), rng);
  Eigen::VectorXd target = g.colwise().mean().transpose();
  target.array() += 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(SolveCalibrationWeights(g, target));
}
BENCHMARK(BM_CalibrationWeights)->Args({100, 10})->Args({100, 20});

void BM_LoopEstimate(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Rng rng(4);
  const Eigen::MatrixXd x = StandardNormalMatrix(n, state.range(1), rng);
  const Eigen::VectorXd pred = x.rowwise().sum();
  Eigen::VectorXi t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = static_cast<int>(i % 2);
  const Eigen::VectorXd y = pred + StandardNormalMatrix(n, 1, rng);
  const RctSample s(y, t, x, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(LoopEstimate(s, pred));
}
BENCHMARK(BM_LoopEstimate)->Args({100, 10})->Args({100, 20});

}  // namespace
}  // namespace privshift

BENCHMARK_MAIN();
