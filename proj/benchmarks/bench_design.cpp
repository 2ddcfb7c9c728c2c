#include <benchmark/benchmark.h>

#include <optional>

#include "xover/catalog.hpp"
#include "xover/gee.hpp"
#include "xover/optimize.hpp"
#include "xover/study.hpp"

using namespace xover;

namespace {

ModelParams params_for(int periods, std::uint64_t index) {
  return sample_parameter(builtin_space("B1"), periods, ModelForm::carryover(), 1234, index);
}

void BM_MakeAtoms(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto universe = all_sequences(p);
  const auto params = params_for(p, 0);
  const auto work = WorkingCorrelation::compound_symmetric(0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        make_atoms(universe, params, work, std::nullopt, ModelForm::carryover()));
  }
}
BENCHMARK(BM_MakeAtoms)->Arg(2)->Arg(3)->Arg(4);

void BM_PseudoInverse(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto universe = all_sequences(p);
  const auto design = AllocationDesign::equal_weights(universe);
  const auto M = information_matrix(design, params_for(p, 0),
                                    WorkingCorrelation::compound_symmetric(0.2),
                                    ModelForm::carryover());
  for (auto _ : state) {
    benchmark::DoNotOptimize(pseudo_inverse(M));
  }
}
BENCHMARK(BM_PseudoInverse)->Arg(3)->Arg(4);

void BM_OptimizeModelBased(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  std::uint64_t index = 0;
  for (auto _ : state) {
    OptimizationProblem problem;
    problem.support = all_sequences(p);
    problem.params = params_for(p, index++);
    problem.work = WorkingCorrelation::compound_symmetric(0.2);
    problem.form = ModelForm::carryover();
    benchmark::DoNotOptimize(optimize_allocation(problem));
  }
}
BENCHMARK(BM_OptimizeModelBased)->Arg(3)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_OptimizeSandwich(benchmark::State& state) {
  std::uint64_t index = 0;
  for (auto _ : state) {
    OptimizationProblem problem;
    problem.support = all_sequences(3);
    problem.params = params_for(3, index++);
    problem.work = WorkingCorrelation::compound_symmetric(0.4);
    problem.truth = WorkingCorrelation::ar1(0.4);
    problem.form = ModelForm::carryover();
    benchmark::DoNotOptimize(optimize_allocation(problem));
  }
}
BENCHMARK(BM_OptimizeSandwich)->Unit(benchmark::kMicrosecond);

void BM_StudyRow(benchmark::State& state) {
  // one full Monte Carlo row at a reduced draw count
  for (auto _ : state) {
    StudyRequest req;
    req.periods = 3;
    req.space = builtin_space("B1");
    req.work = WorkingCorrelation::compound_symmetric(0.2);
    req.designs = {builtin_design("d1", 3), builtin_design("d2", 3), builtin_design("d4", 3)};
    req.n_draws = 200;
    req.seed = 7;
    req.threads = 1;
    benchmark::DoNotOptimize(run_study(req));
  }
}
BENCHMARK(BM_StudyRow)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
