// Microbenchmarks for the hot estimation paths on synthetic panels.

#include <benchmark/benchmark.h>

#include "persuasion/nuisance.hpp"
#include "persuasion/simulate.hpp"
#include "persuasion/staggered.hpp"
#include "persuasion/two_period_regression.hpp"
#include "persuasion/two_period_semiparametric.hpp"

namespace {

using namespace persuasion;

TwoPeriodDgp bench_dgp() {
  TwoPeriodDgp dgp;
  DgpLevel a;
  a.x = {0.0};
  a.prob = 0.5;
  a.propensity = 0.4;
  a.trend = 0.07;
  a.treated = {0.35, 0.20, 0.0, 0.45};
  a.control = {0.55, 0.0, 0.0, 0.45};
  DgpLevel b = a;
  b.x = {1.0};
  b.propensity = 0.6;
  b.treated = {0.25, 0.30, 0.0, 0.45};
  dgp.levels = {a, b};
  return dgp;
}

StaggeredDgp bench_staggered_dgp() {
  StaggeredDgp dgp;
  dgp.horizon = 3;
  StaggeredDgp::Level lvl;
  lvl.prob = 1.0;
  lvl.adoption = {0.25, 0.25, 0.0};
  lvl.g = {0.20, 0.25, 0.30, 0.35};
  lvl.h = {0.0, 0.05, 0.0, 0.02};
  lvl.lift = {{0.5, 0.4, 0.3}, {0.45, 0.35}, {0.3}};
  dgp.levels = {lvl};
  return dgp;
}

void BM_TwoWayFe(benchmark::State& state) {
  const TwoPeriodPanel panel =
      gen_two_period(bench_dgp(), static_cast<int>(state.range(0)), 7, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_two_way_fe(panel));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NuisanceCellMeans(benchmark::State& state) {
  const TwoPeriodPanel panel =
      gen_two_period(bench_dgp(), static_cast<int>(state.range(0)), 7, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_nuisance(panel, NuisanceMethod::CELL_MEANS));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NuisanceLogistic(benchmark::State& state) {
  const TwoPeriodPanel panel =
      gen_two_period(bench_dgp(), static_cast<int>(state.range(0)), 7, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_nuisance(panel, NuisanceMethod::LOGISTIC));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DoublyRobust(benchmark::State& state) {
  const TwoPeriodPanel panel =
      gen_two_period(bench_dgp(), static_cast<int>(state.range(0)), 7, 3);
  const NuisanceFit fit = fit_nuisance(panel, NuisanceMethod::CELL_MEANS);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_dr(panel, fit, Estimand::APRT));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GmmIv(benchmark::State& state) {
  const TwoPeriodPanel panel =
      gen_two_period(bench_dgp(), static_cast<int>(state.range(0)), 7, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gmm_iv(panel, Estimand::APRT));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EventStudyShare(benchmark::State& state) {
  const StaggeredPanel panel = gen_staggered(
      bench_staggered_dgp(), static_cast<int>(state.range(0)), 7, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(espr(panel, 0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_TwoWayFe)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(BM_NuisanceCellMeans)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(BM_NuisanceLogistic)->Arg(1000)->Arg(10000);
BENCHMARK(BM_DoublyRobust)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(BM_GmmIv)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(BM_EventStudyShare)->Arg(1000)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
