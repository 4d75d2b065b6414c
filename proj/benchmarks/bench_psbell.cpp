#include <benchmark/benchmark.h>

#include <random>

#include "psbell/chsh.hpp"
#include "psbell/coincidence.hpp"
#include "psbell/events.hpp"
#include "psbell/montecarlo.hpp"

using namespace psbell;

static void BM_Probability(benchmark::State& state) {
  const auto st = prepare({pi / 8, 0.0, -pi / 2});
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(probability(st, t, 0.3));
    t += 1e-3;
  }
}
BENCHMARK(BM_Probability);

static void BM_Landscape(benchmark::State& state) {
  const auto st = bell_state(BellKind::psi_plus);
  const AngleGrid grid{0.0, pi, pi / static_cast<double>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(landscape(st, grid, grid));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.size() * grid.size()));
}
BENCHMARK(BM_Landscape)->Arg(20)->Arg(180);

static void BM_OptimizeAngles(benchmark::State& state) {
  const auto st = phase_shifted_state(pi / 4);
  for (auto _ : state) benchmark::DoNotOptimize(optimize_angles(st));
}
BENCHMARK(BM_OptimizeAngles)->Unit(benchmark::kMillisecond);

static void BM_SimulateSetting(benchmark::State& state) {
  const auto st = bell_state(BellKind::psi_plus);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_setting(st, 0.3, 1.1, SourceModel{}, DetectorModel{}, 0.1, ++seed));
}
BENCHMARK(BM_SimulateSetting)->Unit(benchmark::kMillisecond);

static void BM_Correlate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> gap(1.0 / 30000.0);
  EventStream a, b;
  double t = 0.0;
  for (int64_t k = 0; k < state.range(0); ++k) {
    t += gap(rng);
    a.timestamps.push_back(t);
    b.timestamps.push_back(t + 1.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(correlate(a, b, 10.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Correlate)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_MAIN();
