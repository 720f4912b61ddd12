#include <benchmark/benchmark.h>

#include "awl/policy_engine.hpp"
#include "awl/sim_engine.hpp"

namespace {

void BM_OptimalDose(benchmark::State& state) {
  awl::Scenario s;
  s.grid = awl::DoseGrid(-6.0, 6.0, static_cast<int>(state.range(0)));
  const auto truth = s.truth();
  const auto xs = awl::draw_covariates(s, 1024, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(awl::optimal_dose(truth, xs[i++ & 1023], s.grid));
}
BENCHMARK(BM_OptimalDose)->Arg(101)->Arg(241)->Arg(1001);

void BM_ValueUnderPolicy(benchmark::State& state) {
  awl::Scenario s;
  const auto truth = s.truth();
  const auto xs = awl::draw_covariates(s, static_cast<int>(state.range(0)), 5);
  const auto policy = awl::Policy::composite_argmax(truth, s.grid);
  for (auto _ : state) benchmark::DoNotOptimize(awl::value_under_policy(policy, truth, xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ValueUnderPolicy)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
