// Copyright 2026 The ACV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference against the OpenMP kernels: corpus generation and the
// fuzz campaign.

#include <omp.h>

#include "acv/corpus.h"
#include "acv/fuzz.h"
#include "benchmark/benchmark.h"

namespace acv {
namespace {

void BM_CorpusSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(GenerateCorpusSerial(1, static_cast<int>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusSerial)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CorpusParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(GenerateCorpus(1, static_cast<int>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}
BENCHMARK(BM_CorpusParallel)->Arg(64)->Unit(benchmark::kMillisecond);

CampaignConfig BenchConfig() {
  CampaignConfig cfg;
  cfg.seeds = {1, 2};
  cfg.search.budget = 100;
  return cfg;
}

void BM_CampaignSerial(benchmark::State& state) {
  auto corpus = GenerateCorpus(7, static_cast<int>(state.range(0)));
  CampaignConfig cfg = BenchConfig();
  for (auto _ : state) {
    auto r = RunCampaignSerial(corpus, cfg);
    if (!r.ok()) state.SkipWithError(std::string(r.status().message()).c_str());
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_CampaignSerial)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_CampaignParallel(benchmark::State& state) {
  auto corpus = GenerateCorpus(7, static_cast<int>(state.range(0)));
  CampaignConfig cfg = BenchConfig();
  for (auto _ : state) {
    auto r = RunCampaign(corpus, cfg);
    if (!r.ok()) state.SkipWithError(std::string(r.status().message()).c_str());
    benchmark::DoNotOptimize(r);
  }
  state.counters["threads"] = omp_get_max_threads();
}
BENCHMARK(BM_CampaignParallel)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace acv

BENCHMARK_MAIN();
