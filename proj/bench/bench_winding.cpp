// Parallel scanline kernel against its serial reference and the brute-force field.
#include <benchmark/benchmark.h>

#include "stogreen/forms.hpp"
#include "stogreen/paths.hpp"
#include "stogreen/winding.hpp"

using namespace stogreen;

namespace {

const ClosedPolyline& loop() {
  static const ClosedPolyline l = close_path(sample_bridge(1 << 16, 1.0, {}, {}, 42));
  return l;
}

void BM_field_parallel(benchmark::State& state) {
  const Grid g = Grid::covering(loop(), static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(winding_field(loop(), g));
  state.SetItemsProcessed(state.iterations() * g.nx * g.ny);
}

void BM_field_serial(benchmark::State& state) {
  const Grid g = Grid::covering(loop(), static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(winding_field_serial(loop(), g));
  state.SetItemsProcessed(state.iterations() * g.nx * g.ny);
}

void BM_field_bruteforce(benchmark::State& state) {
  const ClosedPolyline small = close_path(sample_bridge(1 << 10, 1.0, {}, {}, 42));
  const Grid g = Grid::covering(small, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(winding_field_bruteforce(small, g));
  state.SetItemsProcessed(state.iterations() * g.nx * g.ny);
}

void BM_field_serial_small(benchmark::State& state) {
  const ClosedPolyline small = close_path(sample_bridge(1 << 10, 1.0, {}, {}, 42));
  const Grid g = Grid::covering(small, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(winding_field_serial(small, g));
  state.SetItemsProcessed(state.iterations() * g.nx * g.ny);
}

void BM_level_measures(benchmark::State& state) {
  const WindingField f = winding_field(loop(), Grid::covering(loop(), 2048, 2048));
  const WeightFn w = make_weight("bump");
  for (auto _ : state) benchmark::DoNotOptimize(level_measures(f, w));
}

}  // namespace

BENCHMARK(BM_field_parallel)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_field_serial)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_field_serial_small)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_field_bruteforce)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_level_measures)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
