#include <random>

#include <benchmark/benchmark.h>

#include "rieszdml/rmd.hpp"

namespace {

using namespace rieszdml;

// Sample Gram matrix of n standard normal rows, the shape the estimator sees.
RmdProblem make_problem(Eigen::Index p, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = z(rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = 1.0;
  beta(p / 2) = -0.5;
  Eigen::VectorXd y = X * beta;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += z(rng);
  const Eigen::MatrixXd G = X.transpose() * X / static_cast<double>(n);
  const Eigen::VectorXd M = X.transpose() * y / static_cast<double>(n);
  return RmdProblem(G, M, LambdaRule().value(static_cast<std::size_t>(p), static_cast<std::size_t>(n)));
}

void BM_SolveRmd(benchmark::State& state) {
  const RmdProblem problem = make_problem(state.range(0), 4 * state.range(0) + 100, 7);
  for (auto _ : state) {
    RmdSolution s = solve_rmd(problem);
    benchmark::DoNotOptimize(s.t.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveRmd)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMillisecond)->Complexity();

void BM_SolveRmdBounded(benchmark::State& state) {
  const RmdProblem base = make_problem(state.range(0), 4 * state.range(0) + 100, 7);
  const RmdProblem problem(base.gram(), base.moments(), base.lambda(), 5.0);
  for (auto _ : state) {
    RmdSolution s = solve_rmd(problem);
    benchmark::DoNotOptimize(s.t.data());
  }
}
BENCHMARK(BM_SolveRmdBounded)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SoftThreshold(benchmark::State& state) {
  const auto p = state.range(0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  Eigen::VectorXd M(p);
  for (Eigen::Index j = 0; j < p; ++j) M(j) = z(rng);
  const RmdProblem problem(Eigen::MatrixXd::Identity(p, p), M, 0.5);
  for (auto _ : state) {
    RmdSolution s = solve_rmd(problem);
    benchmark::DoNotOptimize(s.t.data());
  }
}
BENCHMARK(BM_SoftThreshold)->Arg(16)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace
