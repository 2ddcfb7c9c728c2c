#ifndef XOVER_GEE_HPP
#define XOVER_GEE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "xover/correlation.hpp"
#include "xover/model.hpp"
#include "xover/sequence.hpp"

namespace xover {

/// An approximate design: probability weight on each supported sequence.
struct AllocationDesign {
  std::vector<TreatmentSequence> support;
  Eigen::VectorXd weights;

  /// Validates: non-empty, distinct sequences of equal length, weights >= 0
  /// summing to 1 within 1e-12. Throws std::invalid_argument.
  AllocationDesign(std::vector<TreatmentSequence> support, Eigen::VectorXd weights);

  static AllocationDesign equal_weights(std::vector<TreatmentSequence> support);

  int periods() const { return support.front().periods(); }
  int size() const { return static_cast<int>(support.size()); }

  /// Swaps every sequence for its dual, keeping weights.
  AllocationDesign dual() const;
};

enum class ContrastTarget { Direct, Carryover };

/// Unit selector for the targeted coordinate in the packing order.
Eigen::VectorXd contrast_selector(ContrastTarget target, int periods, ModelForm form);

/// Asymptotic variance evaluation of one design at one parameter point,
/// normalized to one subject (n = 1).
struct VarianceResult {
  Eigen::MatrixXd full_matrix;   // pseudo-variance of theta-hat
  double contrast_variance = 0;  // Var(tau-hat) or Var(rho-hat); valid iff estimable
  bool estimable = false;
  int m = 0;                     // parameter count used as the efficiency exponent
};

/// Per-sequence building blocks of the GEE variance at a fixed parameter
/// point. With D = A X and V = A^{1/2} R_w A^{1/2}:
///   bread[k] = D' V^-1 D            = X' A^{1/2} Rw^-1 A^{1/2} X
///   meat[k]  = D' V^-1 Cov(Y) V^-1 D = X' A^{1/2} Rw^-1 Rt Rw^-1 A^{1/2} X
/// meat is filled only when a true correlation is supplied.
struct SequenceAtoms {
  std::vector<Eigen::MatrixXd> bread;
  std::vector<Eigen::MatrixXd> meat;
  int m = 0;

  bool has_meat() const { return !meat.empty(); }
  int size() const { return static_cast<int>(bread.size()); }

  /// Atoms of a sub-support, by index into the original sequence list.
  SequenceAtoms subset(const std::vector<int>& indices) const;
};

SequenceAtoms make_atoms(const std::vector<TreatmentSequence>& support,
                         const ModelParams& params, const WorkingCorrelation& work,
                         const std::optional<WorkingCorrelation>& truth, ModelForm form);

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via spectral
/// decomposition; eigenvalues below 1e-10 * max are treated as zero.
/// Throws NumericalError if the eigensolver fails.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M);

/// Whether c is in the range of M, i.e. || M M^+ c - c ||_inf <= 1e-8.
bool is_estimable(const Eigen::MatrixXd& M, const Eigen::VectorXd& c);

/// Weighted information matrix  M = sum_w p_w bread_w  (n = 1). Structurally
/// singular: the intercept column equals the sum of the period columns.
Eigen::MatrixXd information_matrix(const AllocationDesign& design, const ModelParams& params,
                                   const WorkingCorrelation& work, ModelForm form);

/// Pseudo-inverse of the information matrix (the model-based variance).
Eigen::MatrixXd model_based_variance(const Eigen::MatrixXd& information);

/// Robust variance  B^+ [sum_w p_w meat_w] B^+  with B the information
/// matrix under the working correlation and the meat under the truth.
/// Collapses to model_based_variance when truth == work.
Eigen::MatrixXd sandwich_variance(const AllocationDesign& design, const ModelParams& params,
                                  const WorkingCorrelation& work, const WorkingCorrelation& truth,
                                  ModelForm form);

/// Extracts the targeted contrast variance c' full c together with the
/// estimability status of c under the information matrix.
struct ContrastValue {
  double value = 0.0;
  bool estimable = false;
};
ContrastValue contrast_variance(const Eigen::MatrixXd& full, const Eigen::MatrixXd& information,
                                ContrastTarget target, ModelForm form);

/// One-call evaluation used by the study driver and the CLI.
VarianceResult evaluate_design(const AllocationDesign& design, const ModelParams& params,
                               const WorkingCorrelation& work,
                               const std::optional<WorkingCorrelation>& truth,
                               ContrastTarget target, ModelForm form);

// Atom-level kernels shared with the optimizer. B(w) = sum_k w_k bread_k.

/// Contrast variance at weights w, or +infinity when not estimable.
/// Model-based when atoms have no meat, sandwich otherwise.
double weights_objective(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& c);

}  // namespace xover

#endif  // XOVER_GEE_HPP
