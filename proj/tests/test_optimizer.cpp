#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "xover/errors.hpp"
#include "xover/optimize.hpp"

using namespace xover;

namespace {

std::vector<TreatmentSequence> support_of(std::initializer_list<const char*> seqs) {
  std::vector<TreatmentSequence> out;
  for (const char* s : seqs) out.push_back(TreatmentSequence::parse(s));
  return out;
}

OptimizationProblem basic_problem(std::vector<TreatmentSequence> support, ModelParams params,
                                  WorkingCorrelation work) {
  OptimizationProblem problem;
  problem.support = std::move(support);
  problem.params = std::move(params);
  problem.work = work;
  problem.form = ModelForm::carryover();
  return problem;
}

}  // namespace

TEST_CASE("dual-symmetric pair problem lands on equal weights") {
  ModelParams params;
  params.mu = 0.3;
  params.beta = Eigen::Vector3d::Zero();
  params.tau = 0.0;
  params.rho = 0.0;
  for (const auto work :
       {WorkingCorrelation::independent(), WorkingCorrelation::compound_symmetric(0.2),
        WorkingCorrelation::ar1(0.5)}) {
    const auto problem = basic_problem(support_of({"ABB", "BAA"}), params, work);
    const auto result = optimize_allocation(problem);
    REQUIRE(result.converged);
    // the symmetric point must be optimal; the optimizer may return any
    // optimum, so compare objectives rather than weights
    const auto atoms =
        make_atoms(problem.support, params, work, std::nullopt, problem.form);
    const Eigen::VectorXd c = contrast_selector(ContrastTarget::Direct, 3, problem.form);
    const double at_half = weights_objective(atoms, Eigen::Vector2d(0.5, 0.5), c);
    CHECK(at_half <= result.objective + 1e-9 * result.objective);
    CHECK(result.objective <= at_half + 1e-9 * at_half);
  }
}

TEST_CASE("regression fixture: symmetric {ABB,BAA} objective under CS(0.2)") {
  ModelParams params;
  params.mu = 0.3;
  params.beta = Eigen::Vector3d::Zero();
  params.tau = 0.0;
  params.rho = 0.0;
  const auto problem = basic_problem(support_of({"ABB", "BAA"}), params,
                                     WorkingCorrelation::compound_symmetric(0.2));
  const auto result = optimize_allocation(problem);
  REQUIRE(result.converged);
  CHECK(result.objective == doctest::Approx(1.145389567912162).epsilon(1e-10));
}

TEST_CASE("KKT certificate holds at the reported solution") {
  SubstreamRng rng(21, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int p = 2 + static_cast<int>(rng.next_u01() * 3);
    const auto params = test::random_params(rng, p);
    const auto problem = basic_problem(all_sequences(p), params, test::random_structure(rng));
    const auto result = optimize_allocation(problem);
    REQUIRE(result.converged);
    CHECK(result.kkt_gap <= 1e-6 * result.objective);
    // recompute the certificate from scratch
    const auto atoms =
        make_atoms(problem.support, params, problem.work, std::nullopt, problem.form);
    const Eigen::VectorXd c =
        contrast_selector(ContrastTarget::Direct, p, problem.form);
    const Eigen::VectorXd d = descent_direction(atoms, result.weights, c);
    CHECK(d.maxCoeff() - result.objective <= 1.0000001e-6 * result.objective);
    // weights are a probability vector
    CHECK(result.weights.minCoeff() >= 0.0);
    CHECK(result.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("optimizer matches the exhaustive grid oracle") {
  SubstreamRng rng(22, 0);
  int done = 0;
  for (int trial = 0; done < 12; ++trial) {
    const int p = 2 + static_cast<int>(rng.next_u01() * 2);
    auto support = test::random_support(rng, p, 2);
    if (support.size() > 4) support.erase(support.begin() + 4, support.end());
    const auto params = test::random_params(rng, p);
    auto problem = basic_problem(support, params, test::random_structure(rng));
    OptimizationResult opt, oracle;
    try {
      opt = optimize_allocation(problem);
      oracle = grid_oracle(problem, 0.01);
    } catch (const NotEstimableError&) {
      continue;  // a support that cannot estimate tau at all
    }
    ++done;
    REQUIRE(opt.converged);
    // oracle is an upper bound within its lattice gap
    CHECK(opt.objective <= oracle.objective + 1e-9 * oracle.objective);
    CHECK(oracle.objective <= opt.objective * (1.0 + 1e-3));
  }
}

TEST_CASE("grid oracle on a size-2 support is a 1-D exhaustive scan") {
  SubstreamRng rng(23, 0);
  const auto params = test::random_params(rng, 3);
  auto problem = basic_problem(support_of({"ABB", "BAA"}), params,
                               WorkingCorrelation::compound_symmetric(0.4));
  const auto fine = grid_oracle(problem, 0.001);
  const auto opt = optimize_allocation(problem);
  REQUIRE(opt.converged);
  CHECK(std::abs(fine.objective - opt.objective) <= 1e-4 * opt.objective);
  CHECK(fine.weights.size() == 2);
  CHECK(fine.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("grid oracle honors its combinatorial guard") {
  SubstreamRng rng(24, 0);
  const auto params = test::random_params(rng, 3);
  auto problem = basic_problem(all_sequences(3), params, WorkingCorrelation::independent());
  // 8 supports at resolution 0.01: C(107,7) lattice points, way past 1e7
  CHECK_THROWS_AS(grid_oracle(problem, 0.01), ComplexityGuardError);
  CHECK(grid_lattice_size(8, 0.05) == 888030);
  CHECK(grid_lattice_size(5, 0.01) == 4598126);
  CHECK_NOTHROW(grid_oracle(problem, 0.05));
}

TEST_CASE("full p=3 universe: optimizer within tolerance of the 0.05 oracle") {
  SubstreamRng rng(25, 0);
  const auto params = test::random_params(rng, 3);
  auto problem = basic_problem(all_sequences(3), params,
                               WorkingCorrelation::compound_symmetric(0.2));
  const auto opt = optimize_allocation(problem);
  const auto oracle = grid_oracle(problem, 0.05);
  REQUIRE(opt.converged);
  CHECK(opt.objective <= oracle.objective + 1e-9);
  // the lattice gap at resolution 0.05 is generous
  CHECK(oracle.objective <= opt.objective * 1.05);
}

// Both routes must agree on estimability for a confounded support. In this
// marginal model {AA, BB} still estimates tau through the period-1
// between-group comparison, so both paths succeed and agree.
TEST_CASE("{AA,BB} support: optimizer and oracle agree") {
  SubstreamRng rng(26, 0);
  const auto params = test::random_params(rng, 2);
  auto problem = basic_problem(support_of({"AA", "BB"}), params,
                               WorkingCorrelation::compound_symmetric(0.2));
  const auto opt = optimize_allocation(problem);
  const auto oracle = grid_oracle(problem, 0.01);
  REQUIRE(opt.converged);
  CHECK(oracle.objective <= opt.objective * (1.0 + 1e-3));
  CHECK(opt.objective <= oracle.objective + 1e-9 * oracle.objective);
}

TEST_CASE("a support with no estimable point raises NotEstimable on both paths") {
  SubstreamRng rng(27, 0);
  const auto params = test::random_params(rng, 2);
  // single sequence: tau is confounded with the intercept/period block
  auto problem = basic_problem({TreatmentSequence::parse("AB")}, params,
                               WorkingCorrelation::independent());
  CHECK_THROWS_AS(optimize_allocation(problem), NotEstimableError);
  CHECK_THROWS_AS(grid_oracle(problem, 0.01), NotEstimableError);
}

TEST_CASE("support permutation leaves the objective unchanged") {
  SubstreamRng rng(28, 0);
  const auto params = test::random_params(rng, 3);
  const auto work = WorkingCorrelation::ar1(0.4);
  auto ordered = basic_problem(all_sequences(3), params, work);
  auto shuffled = ordered;
  std::reverse(shuffled.support.begin(), shuffled.support.end());
  const auto a = optimize_allocation(ordered);
  const auto b = optimize_allocation(shuffled);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
}

TEST_CASE("dual-closure: symmetrized weights match the optimum for symmetric theta") {
  ModelParams params;
  params.mu = -0.2;
  params.beta = Eigen::Vector3d::Constant(0.4);
  params.tau = 0.0;
  params.rho = 0.0;
  auto problem = basic_problem(all_sequences(3), params,
                               WorkingCorrelation::compound_symmetric(0.3));
  const auto result = optimize_allocation(problem);
  REQUIRE(result.converged);
  // map each sequence's weight to its dual and average
  const auto& universe = problem.support;
  Eigen::VectorXd symmetrized(result.weights.size());
  for (std::size_t i = 0; i < universe.size(); ++i) {
    const auto dual_str = universe[i].dual().str();
    for (std::size_t j = 0; j < universe.size(); ++j) {
      if (universe[j].str() == dual_str) {
        symmetrized[static_cast<Eigen::Index>(i)] =
            0.5 * (result.weights[static_cast<Eigen::Index>(i)] +
                   result.weights[static_cast<Eigen::Index>(j)]);
        break;
      }
    }
  }
  const auto atoms = make_atoms(universe, params, problem.work, std::nullopt, problem.form);
  const Eigen::VectorXd c = contrast_selector(ContrastTarget::Direct, 3, problem.form);
  const double f_sym = weights_objective(atoms, symmetrized, c);
  CHECK(f_sym <= result.objective * (1.0 + 1e-9));
}

TEST_CASE("sandwich objective: optimizer satisfies the sandwich KKT certificate") {
  SubstreamRng rng(29, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto params = test::random_params(rng, 3);
    auto problem = basic_problem(all_sequences(3), params,
                                 WorkingCorrelation::compound_symmetric(0.4));
    problem.truth = WorkingCorrelation::ar1(0.4);
    const auto result = optimize_allocation(problem);
    REQUIRE(result.converged);
    const auto atoms =
        make_atoms(problem.support, params, problem.work, problem.truth, problem.form);
    const Eigen::VectorXd c = contrast_selector(ContrastTarget::Direct, 3, problem.form);
    const Eigen::VectorXd d = descent_direction(atoms, result.weights, c);
    CHECK(d.maxCoeff() - result.objective <= 1.0000001e-6 * result.objective);
  }
}

TEST_CASE("analytic gradients agree with central finite differences") {
  SubstreamRng rng(30, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = test::random_params(rng, 3);
    const bool misspecified = trial % 2 == 0;
    const auto atoms = make_atoms(
        all_sequences(3), params, WorkingCorrelation::compound_symmetric(0.4),
        misspecified ? std::optional<WorkingCorrelation>(WorkingCorrelation::ar1(0.4))
                     : std::nullopt,
        ModelForm::carryover());
    const Eigen::VectorXd w = test::random_weights(rng, atoms.size());
    const Eigen::VectorXd c = contrast_selector(ContrastTarget::Direct, 3, ModelForm::carryover());
    const Eigen::VectorXd analytic = descent_direction(atoms, w, c);
    const Eigen::VectorXd fd = descent_direction_fd(atoms, w, c);
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    CHECK((analytic - fd).cwiseAbs().maxCoeff() / scale < 1e-4);
  }
}

TEST_CASE("iteration budget: best-so-far result with converged = false") {
  SubstreamRng rng(31, 0);
  const auto params = test::random_params(rng, 3);
  auto problem = basic_problem(all_sequences(3), params, WorkingCorrelation::ar1(0.3));
  OptimizationOptions options;
  options.max_iters = 2;
  const auto result = optimize_allocation(problem, options);
  CHECK(result.iterations <= 3);
  CHECK(std::isfinite(result.objective));
  CHECK(result.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // with the default budget the same problem converges to a value no worse
  const auto full = optimize_allocation(problem);
  REQUIRE(full.converged);
  CHECK(full.objective <= result.objective * (1.0 + 1e-12));
}

TEST_CASE("optimizer beats or matches equal weights and every estimable vertex") {
  SubstreamRng rng(32, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 3;
    const auto params = test::random_params(rng, p);
    const auto work = test::random_structure(rng);
    auto problem = basic_problem(all_sequences(p), params, work);
    const auto result = optimize_allocation(problem);
    REQUIRE(result.converged);
    const auto atoms =
        make_atoms(problem.support, params, work, std::nullopt, problem.form);
    const Eigen::VectorXd c = contrast_selector(ContrastTarget::Direct, p, problem.form);
    const int s = atoms.size();
    CHECK(result.objective <=
          weights_objective(atoms, Eigen::VectorXd::Constant(s, 1.0 / s), c) * (1.0 + 1e-9));
    for (int k = 0; k < s; ++k) {
      Eigen::VectorXd vertex = Eigen::VectorXd::Zero(s);
      vertex[k] = 1.0;
      const double f_vertex = weights_objective(atoms, vertex, c);
      if (std::isfinite(f_vertex)) {
        CHECK(result.objective <= f_vertex * (1.0 + 1e-9));
      }
    }
  }
}
