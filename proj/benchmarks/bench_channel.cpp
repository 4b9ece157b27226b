#include <benchmark/benchmark.h>

#include "vlp/channel.hpp"
#include "vlp/experiment.hpp"
#include "vlp/io.hpp"

namespace {

using namespace vlp;

ScenarioBundle bundle_with_patch(double patch_area) {
  ScenarioBundle b = default_bundle();
  b.channel.patch_area = patch_area;
  return b;
}

void BM_BuildEmitters(benchmark::State& state) {
  const ScenarioBundle b = bundle_with_patch(1.0 / state.range(0));
  const auto patches = partition_surfaces(b.scenario, b.channel.patch_area);
  for (auto _ : state) {
    auto emitters = build_emitters(b.scenario, b.scenario.luminaires[0], patches, b.channel, 1);
    benchmark::DoNotOptimize(emitters.data());
  }
  state.counters["patches"] = static_cast<double>(patches.size());
}
BENCHMARK(BM_BuildEmitters)->Arg(4)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_AccumulateGrid(benchmark::State& state) {
  const ScenarioBundle b = bundle_with_patch(0.04);
  const auto patches = partition_surfaces(b.scenario, b.channel.patch_area);
  const auto emitters =
      build_emitters(b.scenario, b.scenario.luminaires[5], patches, b.channel, 1);
  GridSpec spec;
  spec.step = 8.0 / (state.range(0) - 1);
  const GridPoints grid = spec.points(b.scenario);
  std::vector<double> totals(static_cast<std::size_t>(grid.count()) * (b.channel.max_order + 1));
  for (auto _ : state) {
    std::fill(totals.begin(), totals.end(), 0.0);
    accumulate_grid(emitters, grid, b.scenario.receiver, b.channel.max_order, totals);
    benchmark::DoNotOptimize(totals.data());
  }
  state.counters["emitters"] = static_cast<double>(emitters.size());
}
BENCHMARK(BM_AccumulateGrid)->Arg(9)->Arg(33)->Unit(benchmark::kMillisecond);

void BM_PowerReport(benchmark::State& state) {
  const ScenarioBundle b = bundle_with_patch(0.04);
  for (auto _ : state) {
    auto report = simulate_power_report(b.scenario, {3, 3, 1.2}, b.channel, 1);
    benchmark::DoNotOptimize(report.rows.data());
  }
}
BENCHMARK(BM_PowerReport)->Unit(benchmark::kMillisecond);

}  // namespace
