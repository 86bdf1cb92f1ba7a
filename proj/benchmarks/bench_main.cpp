#include <benchmark/benchmark.h>

#include "rdfl/harness/config.hpp"
#include "rdfl/harness/gradcheck.hpp"
#include "rdfl/numerics/linalg.hpp"
#include "rdfl/numerics/random.hpp"
#include "rdfl/optlayer/sensitivity.hpp"
#include "rdfl/optlayer/solver.hpp"
#include "rdfl/predictor/mlp.hpp"
#include "rdfl/recursive/coupled_layer.hpp"
#include "rdfl/recursive/fixed_point.hpp"
#include "rdfl/recursive/unroll.hpp"

namespace {

using namespace rdfl;

optlayer::ConvexProgram newsvendor(std::size_t n) {
  return optlayer::build_program(harness::default_newsvendor_spec(n));
}

void BM_SolveNewsvendor(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = newsvendor(n);
  numerics::Rng rng(1);
  const Vector c = rng.uniform_vector(n, -12.0, 12.0);
  for (auto _ : state) benchmark::DoNotOptimize(optlayer::solve(p, c));
}
BENCHMARK(BM_SolveNewsvendor)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_SolveMatching(benchmark::State& state) {
  const auto players = static_cast<std::size_t>(state.range(0));
  const auto p = optlayer::build_program(harness::default_matching_spec(players));
  numerics::Rng rng(2);
  const Vector c = rng.uniform_vector(players * players, 0.2, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(optlayer::solve(p, c));
}
BENCHMARK(BM_SolveMatching)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_KktSensitivity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = newsvendor(n);
  numerics::Rng rng(3);
  const auto sol = optlayer::solve(p, rng.uniform_vector(n, -12.0, 12.0));
  for (auto _ : state) benchmark::DoNotOptimize(optlayer::kkt_sensitivity(p, sol));
}
BENCHMARK(BM_KktSensitivity)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_SpectralRadius(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  numerics::Rng rng(4);
  const Matrix j = (0.5 / static_cast<double>(n)) * rng.uniform_matrix(n, n, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(numerics::spectral_radius_estimate(j));
}
BENCHMARK(BM_SpectralRadius)->Arg(10)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_UnrollForwardBackward(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const auto inst = harness::make_newsvendor_check_instance(1);
  const recursive::CoupledLayer layer(inst.params, inst.program);
  for (auto _ : state) {
    const auto trace = recursive::unroll_forward(layer, inst.x0, inst.v, K);
    benchmark::DoNotOptimize(recursive::unroll_gradient(trace, inst.loss_grad));
  }
}
BENCHMARK(BM_UnrollForwardBackward)->Arg(5)->Arg(10)->Arg(25)->Unit(benchmark::kMicrosecond);

void BM_ImplicitForwardBackward(benchmark::State& state) {
  const auto inst = harness::make_newsvendor_check_instance(1);
  const recursive::CoupledLayer layer(inst.params, inst.program);
  recursive::FixedPointOptions o;
  o.tol = state.range(0) == 0 ? 0.2 : 1e-6;
  o.max_iter = 500;
  for (auto _ : state) {
    const auto eq = recursive::fixed_point_solve(layer, inst.x0, inst.v, o);
    benchmark::DoNotOptimize(recursive::implicit_gradient(layer, eq, inst.v, inst.loss_grad));
  }
}
BENCHMARK(BM_ImplicitForwardBackward)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
