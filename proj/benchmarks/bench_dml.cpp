#include <benchmark/benchmark.h>

#include "rieszdml/dml.hpp"
#include "rieszdml/simulation.hpp"

namespace {

using namespace rieszdml;

SparseLinearDgp sparse_design(std::size_t dim) {
  SparseLinearDgp spec{Dictionary::polynomial(dim, 1), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim) + 1)};
  spec.beta_star(1) = 1.0;
  spec.beta_star(2) = 0.5;
  spec.beta_star(3) = 0.25;
  return spec;
}

void BM_DmlEstimate(benchmark::State& state) {
  const SparseLinearDgp spec = sparse_design(49);
  const Dataset data = generate(Dgp(spec), static_cast<std::size_t>(state.range(0)), 11);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(49);
  a(0) = 1.0;
  const Functional f = Functional::average_derivative(a);
  DmlOptions opts;
  opts.seed = 5;
  for (auto _ : state) {
    DmlResult r = dml_estimate(data, spec.dict, f, opts);
    benchmark::DoNotOptimize(r.theta_hat);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DmlEstimate)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_DmlEstimateAte(benchmark::State& state) {
  AteLogisticDgp ate;
  ate.outcome_coefs = Eigen::VectorXd::Zero(9);
  ate.outcome_coefs(0) = 0.5;
  ate.propensity_coefs = Eigen::VectorXd::Zero(9);
  ate.propensity_coefs(0) = 0.25;
  const Dataset data = generate(Dgp(ate), 2000, 3);
  const Dictionary dict = Dictionary::treatment_interacted(Dictionary::polynomial(9, 1), 0);
  const Functional f = Functional::average_treatment_effect(0);
  DmlOptions opts;
  opts.seed = 5;
  for (auto _ : state) {
    DmlResult r = dml_estimate(data, dict, f, opts);
    benchmark::DoNotOptimize(r.theta_hat);
  }
}
BENCHMARK(BM_DmlEstimateAte)->Unit(benchmark::kMillisecond);

}  // namespace
