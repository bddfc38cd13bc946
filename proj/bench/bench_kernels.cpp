#include <benchmark/benchmark.h>

#include <random>

#include "robcomp/breakdown.hpp"
#include "robcomp/manipulate.hpp"
#include "robcomp/monitor.hpp"

using namespace robcomp;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<Point2D> uniform_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Point2D> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

const std::vector<EstimatorSpec> kMedian3{EstimatorSpec::median(), EstimatorSpec::median(), EstimatorSpec::median()};

template <bool Parallel>
void BM_EvaluateStack(benchmark::State& state) {
  const auto data = HierarchicalDataset::three_level(normals(50 * 100 * 24, 1), 50, 100, 24);
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(evaluate_stack(kMedian3, data));
    } else {
      benchmark::DoNotOptimize(serial::evaluate_stack(kMedian3, data));
    }
  }
}

template <bool Parallel>
void BM_MonitorGrid(benchmark::State& state) {
  AttackScenario s;
  s.n1 = 51;
  s.k1 = 510;
  s.seed = 2;
  const auto combos = default_combos();
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(run_grid(s, combos));
    } else {
      benchmark::DoNotOptimize(serial::run_grid(s, combos));
    }
  }
}

template <bool Parallel>
void BM_Manipulation(benchmark::State& state) {
  const auto data = HierarchicalDataset::two_level(uniform_points(50 * 20, 3), 50, 20);
  const Point2D target{12, -7};
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(plan_manipulation(data, target));
    } else {
      benchmark::DoNotOptimize(serial::plan_manipulation(data, target));
    }
  }
}

template <bool Parallel>
void BM_Breakdown(benchmark::State& state) {
  const std::vector<EstimatorSpec> levels{EstimatorSpec::median(), EstimatorSpec::median()};
  const auto data = HierarchicalDataset::two_level(normals(9 * 9, 4), 9, 9);
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(measure_breakdown(levels, data, {}));
    } else {
      benchmark::DoNotOptimize(serial::measure_breakdown(levels, data, {}));
    }
  }
}

}  // namespace

BENCHMARK(BM_EvaluateStack<false>)->Name("evaluate_stack/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateStack<true>)->Name("evaluate_stack/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonitorGrid<false>)->Name("monitor_grid/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonitorGrid<true>)->Name("monitor_grid/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Manipulation<false>)->Name("manipulation/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Manipulation<true>)->Name("manipulation/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Breakdown<false>)->Name("breakdown/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Breakdown<true>)->Name("breakdown/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
