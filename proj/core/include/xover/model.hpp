#ifndef XOVER_MODEL_HPP
#define XOVER_MODEL_HPP

#include <Eigen/Dense>
#include <optional>

#include "xover/sequence.hpp"

namespace xover {

/// Which linear predictor is fitted: with or without first-order carryover.
/// The carryover form has p+3 columns, the no-carryover form p+2.
struct ModelForm {
  bool include_carryover = true;

  static constexpr ModelForm carryover() { return ModelForm{true}; }
  static constexpr ModelForm no_carryover() { return ModelForm{false}; }

  int columns(int periods) const { return periods + (include_carryover ? 3 : 2); }

  friend bool operator==(const ModelForm&, const ModelForm&) = default;
};

/// Coefficients of the reparametrized two-treatment logistic model, packed
/// throughout the library in the order (mu, beta_1..beta_p, tau, rho).
/// tau = (tau_A - tau_B)/2 and rho = (rho_A - rho_B)/2; rho is absent under
/// the no-carryover form.
struct ModelParams {
  double mu = 0.0;
  Eigen::VectorXd beta;
  double tau = 0.0;
  std::optional<double> rho;

  int periods() const { return static_cast<int>(beta.size()); }
  ModelForm form() const { return ModelForm{rho.has_value()}; }
  int dimension() const { return periods() + (rho ? 3 : 2); }

  /// Packs into the shared coefficient order. Throws on non-finite entries.
  Eigen::VectorXd pack() const;

  /// Inverse of pack(); `form` decides whether a rho entry is expected.
  static ModelParams unpack(const Eigen::VectorXd& theta, ModelForm form);
};

/// Index of the tau (direct-effect) coordinate in the packing order.
inline int tau_index(int periods) { return periods + 1; }
/// Index of the rho (carryover) coordinate; valid only under the carryover form.
inline int rho_index(int periods) { return periods + 2; }

/// Design matrix of one sequence: columns [1 | period indicators | phi_direct
/// | phi_carry (carryover form only)], with the period-1 carry entry 0.
/// Always rank-deficient by one (intercept = sum of period indicators).
Eigen::MatrixXd build_design_matrix(const TreatmentSequence& seq, ModelForm form);

/// eta = X * theta. Throws std::invalid_argument on dimension mismatch.
Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta);

/// Elementwise inverse logit; strictly inside (0,1) for finite input.
Eigen::VectorXd mean_response(const Eigen::VectorXd& eta);

/// log(mu/(1-mu)) elementwise.
Eigen::VectorXd logit(const Eigen::VectorXd& mu);

/// Diagonal of the Bernoulli variance matrix A = diag(mu_i (1 - mu_i)).
/// Throws DegenerateMeanError if any entry falls below 1e-12.
Eigen::VectorXd variance_diag(const Eigen::VectorXd& mu);

}  // namespace xover

#endif  // XOVER_MODEL_HPP
