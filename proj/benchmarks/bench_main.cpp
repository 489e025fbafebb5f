#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "reachrisk/config.hpp"

using namespace reachrisk;

namespace {

ForecastStep wide_step() {
  ForecastStep s;
  s.modes = {BivariateNormal{-0.5, 0.0, 1.2, 0.4, 0.3}, BivariateNormal{-0.5, 0.6, 1.0, 0.3, 0.0},
             BivariateNormal{-0.5, -0.6, 1.0, 0.3, -0.2}};
  s.mode_prob = {0.5, 0.3, 0.2};
  return s;
}

void BM_CellMassCorrelated(benchmark::State& state) {
  const InputGrid g;
  const BivariateNormal d{-0.7, 0.2, 1.3, 0.6, 0.6};
  for (auto _ : state) {
    double sum = 0;
    for (std::size_t id = 0; id < g.size(); ++id) sum += cell_mass(d, g.cell(id));
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}
BENCHMARK(BM_CellMassCorrelated);

void BM_InputDistribution(benchmark::State& state) {
  const FrsEngine e(StateGrid{}, InputGrid{}, {}, {});
  const auto step = wide_step();
  const auto& betas = beta_presets::kFive;
  const std::vector<double> w(betas.size(), 1.0 / static_cast<double>(betas.size()));
  for (auto _ : state) benchmark::DoNotOptimize(e.input_distribution(step, {betas, w}));
}
BENCHMARK(BM_InputDistribution);

void BM_FrsPropagate(benchmark::State& state) {
  FrsConfig cfg;
  cfg.workers = static_cast<std::size_t>(state.range(0));
  const FrsEngine e(StateGrid{}, InputGrid{}, {}, cfg);
  AccelerationForecast f;
  f.steps.assign(5, wide_step());
  const auto belief = init_uniform(beta_presets::kFive);
  const auto start = ProbabilityField::point(e.states(), {12, 0.5, 26, 0.3});
  for (auto _ : state) benchmark::DoNotOptimize(e.propagate(start, f, belief));
}
BENCHMARK(BM_FrsPropagate)->Arg(1)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_BrsLookup(benchmark::State& state) {
  ValueTable t;
  t.grid = BrsGrid::desk();
  t.values.resize(t.grid.size());
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-5, 5);
  for (float& v : t.values) v = u(rng);
  std::uniform_real_distribution<double> y1(-10, 40), y2(-4, 4), psi(-0.7, 0.7), sp(20, 40);
  std::vector<RelativeState> xs(1024);
  for (auto& x : xs) x = {y1(rng), y2(rng), psi(rng), sp(rng), sp(rng)};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(t.lookup(xs[i++ & 1023]));
}
BENCHMARK(BM_BrsLookup);

void BM_BrsSolveSmall(benchmark::State& state) {
  const BrsGrid grid{{GridAxis(-10, 40, 5), GridAxis(-4, 4, 2), GridAxis(-0.5235987755982988, 0.5235987755982988,
                                                                          0.2617993877991494),
                      GridAxis(20, 40, 10), GridAxis(20, 40, 10)}};
  const RelativeGame game(derive_input_ranges({}, {}));
  for (auto _ : state) benchmark::DoNotOptimize(solve_brs(grid, game, 1.0));
}
BENCHMARK(BM_BrsSolveSmall)->Unit(benchmark::kMillisecond);

void BM_SimulateEvent(benchmark::State& state) {
  const ScenarioConfig sc;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sc));
}
BENCHMARK(BM_SimulateEvent)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
