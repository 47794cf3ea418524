#include <benchmark/benchmark.h>

#include "workbench/classifiers.hpp"
#include "workbench/mestim.hpp"
#include "workbench/metrics.hpp"
#include "workbench/predictor.hpp"

using namespace workbench;

static void BM_Erm(benchmark::State& state) {
  const auto setting = static_cast<SemiSupSetting>(state.range(0));
  const auto pair = gen_semisup(setting, 4, 1000, 1, 6);
  const auto model = WorkingModel::for_setting(setting, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(erm(model, pair.labeled));
  state.SetLabel(to_string(setting));
}
BENCHMARK(BM_Erm)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

static void BM_McTruthLinear(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(mc_truth(SemiSupSetting::Linear, 4, std::nullopt, 100000, 7));
}
BENCHMARK(BM_McTruthLinear)->Unit(benchmark::kMillisecond);

static void BM_KnnCv(benchmark::State& state) {
  const auto b = gen_labelnoise(NoiseModel::M2, static_cast<std::size_t>(state.range(0)), 0.3, 10, 8);
  for (auto _ : state) benchmark::DoNotOptimize(fit_knn_cv(b.train, 5, 8));
}
BENCHMARK(BM_KnnCv)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Ale(benchmark::State& state) {
  const auto d = gen_sparse_linear(10, 3, BetaType::II, CovType::Identity, 1.0, static_cast<std::size_t>(state.range(0)),
                                   10, 9);
  const FunctionModel m([](const Vector& x) { return std::sin(x(0)) + x(1) * x(2); });
  for (auto _ : state) benchmark::DoNotOptimize(ale(m, d.train, 0));
}
BENCHMARK(BM_Ale)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);
