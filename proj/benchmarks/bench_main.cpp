#include <benchmark/benchmark.h>

#include <memory>

#include "subma/bellman.hpp"
#include "subma/horizontal.hpp"
#include "subma/problem_spec.hpp"
#include "subma/random.hpp"
#include "subma/solver.hpp"

namespace {

Eigen::MatrixXd random_spd(int m, subma::Rng& rng, double floor_value) {
  Eigen::MatrixXd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = rng.normal();
  return G * G.transpose() + floor_value * Eigen::MatrixXd::Identity(m, m);
}

void BM_logdet_exact(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  subma::Rng rng(7);
  const Eigen::MatrixXd A = random_spd(m, rng, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(subma::logdet_exact(A, 0.5));
}
BENCHMARK(BM_logdet_exact)->Arg(2)->Arg(3)->Arg(5);

void BM_control_grid(benchmark::State& state) {
  const int density = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(subma::control_grid(2, 1e-3, density));
}
BENCHMARK(BM_control_grid)->Arg(8)->Arg(64)->Arg(512);

void BM_horizontal_jet_sweep(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  auto built = subma::build_problem([&] {
    auto spec = subma::builtin_problem("heisenberg-gauss-manufactured");
    subma::apply_override(spec, "resolution=" + std::to_string(res) + " " +
                                    std::to_string(res) + " " + std::to_string(res));
    return spec;
  }());
  const subma::GridFunction u = built.exact_solution();
  for (auto _ : state) {
    double acc = 0.0;
    for (Eigen::Index node : built.grid->interior_nodes())
      acc += built.problem.table().jet(u, node).S.trace();
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_horizontal_jet_sweep)->Arg(9)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

void BM_policy_solve(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  auto built = subma::build_problem([&] {
    auto spec = subma::builtin_problem("heisenberg-gauss-manufactured");
    subma::apply_override(spec, "resolution=" + std::to_string(res) + " " +
                                    std::to_string(res) + " " + std::to_string(res));
    return spec;
  }());
  const subma::GridFunction u = built.exact_solution();
  const subma::Policy policy = subma::policy_improve(built.problem, u, {});
  for (auto _ : state)
    benchmark::DoNotOptimize(subma::policy_solve(built.problem, policy, u));
}
BENCHMARK(BM_policy_solve)->Arg(9)->Arg(17)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
