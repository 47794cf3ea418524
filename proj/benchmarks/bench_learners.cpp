#include <benchmark/benchmark.h>

#include "workbench/gbrt.hpp"
#include "workbench/gpr.hpp"
#include "workbench/krr.hpp"
#include "workbench/lasso.hpp"
#include "workbench/synthgen.hpp"

using namespace workbench;

static void BM_GprFit1D(benchmark::State& state) {
  const auto probe = gen_function_probe(ProbeKind::Quad1D, static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gpr(probe.train, {0.1}, 1, {KernelFamily::ConstRBF}));
}
BENCHMARK(BM_GprFit1D)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_GprLml(benchmark::State& state) {
  const auto probe = gen_function_probe(ProbeKind::Step1D, static_cast<std::size_t>(state.range(0)), 2);
  const Vector lp = Vector::Zero(static_cast<Eigen::Index>(kernel_param_count(KernelFamily::ConstMatern)));
  Vector g;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        gpr_log_marginal_likelihood(KernelFamily::ConstMatern, lp, 0.1, probe.train.x, *probe.train.y, &g));
}
BENCHMARK(BM_GprLml)->Arg(32)->Arg(128)->Arg(256);

static void BM_KrrFit(benchmark::State& state) {
  const auto b = gen_covshift(MeanFn::F2, static_cast<std::size_t>(state.range(0)), 10, 10, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fit_krr(b.source, KernelSpec::rbf(0.2), 1e-3));
}
BENCHMARK(BM_KrrFit)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_LassoCv(benchmark::State& state) {
  const auto d = gen_sparse_linear(static_cast<std::size_t>(state.range(0)), 5, BetaType::I, CovType::Banded, 1.0,
                                   500, 10, 4);
  for (auto _ : state) benchmark::DoNotOptimize(fit_lasso_cv(d.train, 5, 4));
}
BENCHMARK(BM_LassoCv)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_GbrtFixed(benchmark::State& state) {
  const auto d = gen_cate(CateSetup::A, static_cast<std::size_t>(state.range(0)), 1.0, 5);
  const Dataset train(d.x, d.outcome);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gbrt_fixed(train, std::nullopt, {100, 3, 0.1}));
}
BENCHMARK(BM_GbrtFixed)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
