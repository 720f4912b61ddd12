#include <benchmark/benchmark.h>

#include "awl/inference.hpp"
#include "awl/outcome_regression.hpp"
#include "awl/pseudo_likelihood.hpp"
#include "awl/sim_engine.hpp"

namespace {

void BM_FitSurface(benchmark::State& state) {
  awl::Scenario s;
  s.n = static_cast<int>(state.range(0));
  const auto data = awl::generate_dataset(s, 11);
  const auto spec = awl::BasisSpec::full_quadratic(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(awl::fit_surface(data, awl::OutcomeColumn::kY, spec));
}
BENCHMARK(BM_FitSurface)->Arg(500)->Arg(5000)->Unit(benchmark::kMicrosecond);

// Plug-in surfaces, pseudo-likelihood fit and sandwich inference.
void BM_FitAndInfer(benchmark::State& state) {
  awl::Scenario s;
  s.n = static_cast<int>(state.range(0));
  s.grid = awl::DoseGrid(-1.0, 1.0, 101);
  const auto data = awl::generate_dataset(s, 13);
  const auto spec = awl::BasisSpec::full_quadratic(2);
  awl::FitConfig cfg;
  cfg.grid = s.grid;
  for (auto _ : state) {
    const auto qy = awl::fit_surface(data, awl::OutcomeColumn::kY, spec);
    const auto qz = awl::fit_surface(data, awl::OutcomeColumn::kZ, spec);
    const awl::PseudoLikelihood pl(data, qy.surface, qz.surface, s.weight_shape(), s.grid);
    const auto est = awl::fit(pl, cfg);
    benchmark::DoNotOptimize(awl::infer(pl, est));
  }
}
BENCHMARK(BM_FitAndInfer)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
