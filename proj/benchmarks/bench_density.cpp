#include <benchmark/benchmark.h>

#include "awl/assignment_density.hpp"
#include "awl/pseudo_likelihood.hpp"
#include "awl/sim_engine.hpp"

namespace {

awl::Scenario scenario(int n, int m) {
  awl::Scenario s;
  s.n = n;
  s.grid = awl::DoseGrid(-6.0, 6.0, m);
  return s;
}

void BM_DensityAt(benchmark::State& state) {
  const auto s = scenario(100, static_cast<int>(state.range(0)));
  const auto truth = s.truth();
  const awl::Vector x = awl::Vector::Constant(2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(awl::density_at(truth, 0.25, x, s.grid));
}
BENCHMARK(BM_DensityAt)->Arg(101)->Arg(241)->Arg(1001);

// One value + score + Hessian pass over the whole sample.
void BM_Evaluate(benchmark::State& state) {
  const auto s = scenario(static_cast<int>(state.range(0)), 241);
  const auto truth = s.truth();
  const auto data = awl::generate_dataset(s, 7);
  const awl::PseudoLikelihood pl(data, truth.q_y, truth.q_z, s.weight_shape(), s.grid);
  const awl::Vector theta = awl::Vector::Constant(1, -0.8);
  for (auto _ : state)
    benchmark::DoNotOptimize(pl.evaluate(theta, 0.25, awl::PseudoLikelihood::Order::kHessian));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(500)->Arg(2000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace
