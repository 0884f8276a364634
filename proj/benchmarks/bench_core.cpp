#include <benchmark/benchmark.h>

#include <cmath>

#include "genlab/ddpm.hpp"
#include "genlab/density_lab.hpp"
#include "genlab/linalg.hpp"
#include "genlab/nn.hpp"

using namespace genlab;

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = rng.normal(n, n), b = rng.normal(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNCubed);

static void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const nn::Mlp net({2, 128, 128, 2}, rng, {nn::Activation::kTanh, nn::Activation::kIdentity, 1.0});
  const Tensor x = rng.normal(static_cast<std::size_t>(state.range(0)), 2);
  const auto params = net.parameters();
  for (auto _ : state) {
    const auto g = ad::backward(ad::mean(ad::square(net.forward(ad::constant(x)))));
    benchmark::DoNotOptimize(g.of(params[0]));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(128)->Arg(512);

static void BM_SymEigen(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Tensor a = rng.normal(d, d);
  const Tensor s = matmul(transpose(a), a);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::sym_eigen(s));
}
BENCHMARK(BM_SymEigen)->Arg(4)->Arg(16)->Arg(64);

static void BM_DdpmTrainStep(benchmark::State& state) {
  Rng rng(4);
  ddpm::EpsNet net(2, 100, {128, 128}, rng);
  const auto sched = ddpm::scaled_schedule(100);
  const Tensor data = rng.normal(2000, 2);
  nn::Optimizer opt({nn::OptimizerKind::kAdam, 1e-3});
  for (auto _ : state) benchmark::DoNotOptimize(ddpm::train(net, sched, data, {1, 128}, opt, rng));
}
BENCHMARK(BM_DdpmTrainStep);

static void BM_FokkerPlanck(benchmark::State& state) {
  const lab::Grid1d grid;
  const auto p0 = lab::tabulate(grid, [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); });
  // 100 explicit steps per iteration
  for (auto _ : state)
    benchmark::DoNotOptimize(lab::fokker_planck_1d([](double x) { return -x; }, std::sqrt(2.0), grid, p0, 100 * grid.dt));
}
BENCHMARK(BM_FokkerPlanck);
BENCHMARK_MAIN();
