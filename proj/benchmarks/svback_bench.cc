// Copyright 2026 The svback Authors
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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "svback/evaluation.h"
#include "svback/plda_model.h"
#include "svback/scoring.h"
#include "svback/synthesis.h"

namespace svback {
namespace {

Vector unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = g(rng);
  return v.normalized();
}

PldaModel trained(int d) {
  const auto set =
      sample(SynthSpec::from_preset(SynthPreset::kCorrelatedBetween, d, 200, 5, 1))
          .embeddings;
  return train(set, PldaKind::kFull, {.iterations = 3});
}

void BM_BuildKernel(benchmark::State& state) {
  const auto model = trained(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_kernel(model));
}
BENCHMARK(BM_BuildKernel)->Arg(32)->Arg(128)->Arg(256);

void BM_PairwiseLlr(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto kernel = build_kernel(trained(d));
  std::mt19937_64 rng(2);
  const Vector a = unit(rng, d), b = unit(rng, d);
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_llr(kernel, a, b));
}
BENCHMARK(BM_PairwiseLlr)->Arg(32)->Arg(256);

void BM_ScoreTrials(benchmark::State& state) {
  auto spec = SynthSpec::from_preset(SynthPreset::kIsotropic, 32, 60, 5, 3);
  const auto raw = sample(spec).embeddings;
  const auto set = preprocess(raw, compute_mean(raw));
  const auto trials = make_trials(set);
  const auto model = train(set, PldaKind::kFull, {.iterations = 2});
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(score_trials(model, set, trials, {.threads = threads}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trials.size()));
}
BENCHMARK(BM_ScoreTrials)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_EmIteration(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto set =
      sample(SynthSpec::from_preset(SynthPreset::kIsotropic, d, 1000, 10, 4)).embeddings;
  const auto model = init_identity(d);
  for (auto _ : state)
    benchmark::DoNotOptimize(m_step(e_step(model, set), set, PldaKind::kFull));
}
BENCHMARK(BM_EmIteration)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Eer(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> tar, non;
  for (int i = 0; i < state.range(0); ++i) (i % 10 ? non : tar).push_back(g(rng));
  for (auto _ : state) benchmark::DoNotOptimize(compute_eer(tar, non));
}
BENCHMARK(BM_Eer)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace svback

BENCHMARK_MAIN();
