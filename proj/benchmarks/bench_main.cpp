#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "gbcos/gb_boundary.hpp"
#include "gbcos/geometry.hpp"
#include "gbcos/margin_losses.hpp"
#include "gbcos/sphere.hpp"
#include "gbcos/toy_trainer.hpp"

namespace {

std::vector<double> uniform_scores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void BM_Logsumexp(benchmark::State& state) {
  const auto vals = uniform_scores(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(gbcos::logsumexp(vals, 32.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Logsumexp)->Arg(10)->Arg(100)->Arg(10000);

void BM_GbCosFaceGrad(benchmark::State& state) {
  const gbcos::ScoreBundle b(0.6, uniform_scores(static_cast<std::size_t>(state.range(0)), 2));
  const gbcos::LossConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(gbcos::gb_cosface_grad(b, 0.4, cfg));
}
BENCHMARK(BM_GbCosFaceGrad)->Arg(9)->Arg(99)->Arg(999);

void BM_SoftmaxFamilyGrad(benchmark::State& state) {
  const gbcos::ScoreBundle b(0.6, uniform_scores(static_cast<std::size_t>(state.range(0)), 3));
  const gbcos::LossConfig cfg = gbcos::LossConfig::cosface(32.0, 0.32);
  for (auto _ : state) benchmark::DoNotOptimize(gbcos::softmax_family_grad(b, cfg));
}
BENCHMARK(BM_SoftmaxFamilyGrad)->Arg(9)->Arg(99)->Arg(999);

void BM_TraceBoundary(benchmark::State& state) {
  gbcos::BoundarySpec spec = gbcos::BoundarySpec::with_angle(M_PI / 3.0);
  spec.alpha = 0.5;
  spec.grid_resolution = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gbcos::trace_boundary(spec));
}
BENCHMARK(BM_TraceBoundary)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const gbcos::ToyDataset data = gbcos::generate_dataset(gbcos::ToyDatasetSpec{});
  gbcos::OptimizerConfig opt;
  opt.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(gbcos::train(data, gbcos::LossConfig{}, opt));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
