#ifndef XOVER_OPTIMIZE_HPP
#define XOVER_OPTIMIZE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "xover/gee.hpp"

namespace xover {

/// c-optimal allocation problem: minimize the target contrast variance over
/// probability weights on the support. With `truth` present the sandwich
/// variance is minimized, otherwise the model-based one.
struct OptimizationProblem {
  std::vector<TreatmentSequence> support;
  ModelParams params;
  WorkingCorrelation work;
  std::optional<WorkingCorrelation> truth;
  ContrastTarget target = ContrastTarget::Direct;
  ModelForm form = ModelForm::carryover();
};

struct OptimizationOptions {
  double kkt_tol = 1e-6;  // relative to the objective
  int max_iters = 10000;
  /// Optional warm start (must lie on the simplex of the support). Empty
  /// means the barycenter. Warm starts skip the multiplicative phase and go
  /// straight to the refinement loop, which can regrow the support.
  Eigen::VectorXd start;
};

struct OptimizationResult {
  Eigen::VectorXd weights;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;  // max directional-derivative violation (absolute)
};

/// Multiplicative-gradient updates on the simplex with a vertex-exchange /
/// restricted-Newton refinement pass; stops when the equivalence-theorem
/// certificate max_w d_w - objective <= kkt_tol * objective holds.
/// Throws NotEstimableError if no tested simplex point (barycenter and all
/// pair midpoints) makes the target estimable.
OptimizationResult optimize_allocation(const OptimizationProblem& problem,
                                       const OptimizationOptions& options = {});

/// Atom-level variant used by the study driver (atoms computed once per draw).
OptimizationResult optimize_weights(const SequenceAtoms& atoms, const Eigen::VectorXd& c,
                                    const OptimizationOptions& options = {});

/// Exhaustively scans all simplex lattice points with weights in multiples
/// of `resolution` and returns the best. Throws ComplexityGuardError when
/// the lattice exceeds 10^7 points.
OptimizationResult grid_oracle(const OptimizationProblem& problem, double resolution);

/// Number of lattice points the oracle would visit (composition count).
/// Saturates at 2^64-1 on overflow.
std::uint64_t grid_lattice_size(int support_size, double resolution);

/// Minus the objective gradient, one entry per support sequence. Analytic
/// for both objectives; exposed for KKT diagnostics and tests.
Eigen::VectorXd descent_direction(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& c);

/// Central finite-difference version of descent_direction (step 1e-6).
Eigen::VectorXd descent_direction_fd(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& c, double step = 1e-6);

}  // namespace xover

#endif  // XOVER_OPTIMIZE_HPP
