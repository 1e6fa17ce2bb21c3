#include "atl/distributions.hpp"
#include "atl/kernels.hpp"
#include "atl/neighbours.hpp"
#include "atl/parallel.hpp"
#include "atl/tree_search.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace atl;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

void BM_NeighbourOrders(benchmark::State& state) {
  const Dataset src = sample(setting1(), Which::P, static_cast<std::size_t>(state.range(1)), 1);
  const Dataset calib = sample(setting1(), Which::Q, 50, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::neighbour_orders(src, calib, exec_of(state)));
}

void BM_ScoreCandidates(benchmark::State& state) {
  const Dataset src = sample(setting2(), Which::P, static_cast<std::size_t>(state.range(1)), 1);
  const Dataset calib = sample(setting2(), Which::Q, 50, 2);
  const CalibrationContext ctx(src, calib);
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> values;
  for (const auto& p : random_partitions(src, 2, 100, rng)) {
    const TreeFunction h(p, {0.3, 0.7});
    values.push_back(ctx.tree_values(h));
  }
  const auto sigmas = RobustnessGrid::geometric(src.size(), 32);
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::score_candidates(ctx, values, sigmas.values(), exec_of(state)));
}

void BM_Predict(benchmark::State& state) {
  const auto ref = std::make_shared<const Dataset>(sample(setting1(), Which::P, static_cast<std::size_t>(state.range(1)), 1));
  const Dataset test = sample(setting1(), Which::Q, 1000, 2);
  const Classifier f = Classifier::source_calibrated(1.0, TreeFunction::constant_half(2), ref);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::predict(f, test, exec_of(state)));
}

}  // namespace

// First argument: 0 serial, 1 parallel. Second: reference sample size.
BENCHMARK(BM_NeighbourOrders)->ArgsProduct({{0, 1}, {100, 1000}});
BENCHMARK(BM_ScoreCandidates)->ArgsProduct({{0, 1}, {100, 1000}});
BENCHMARK(BM_Predict)->ArgsProduct({{0, 1}, {100, 1000}});

BENCHMARK_MAIN();
