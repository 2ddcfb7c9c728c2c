#include "xover/model.hpp"

#include <cmath>
#include <stdexcept>

#include "xover/errors.hpp"

namespace xover {

namespace {
constexpr double kDegenerateVariance = 1e-12;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}
}  // namespace

Eigen::VectorXd ModelParams::pack() const {
  require_finite(mu, "mu");
  require_finite(tau, "tau");
  for (Eigen::Index i = 0; i < beta.size(); ++i) require_finite(beta[i], "beta");
  if (rho) require_finite(*rho, "rho");

  Eigen::VectorXd theta(dimension());
  theta[0] = mu;
  theta.segment(1, beta.size()) = beta;
  theta[1 + beta.size()] = tau;
  if (rho) theta[2 + beta.size()] = *rho;
  return theta;
}

ModelParams ModelParams::unpack(const Eigen::VectorXd& theta, ModelForm form) {
  const int extras = form.include_carryover ? 3 : 2;
  const int p = static_cast<int>(theta.size()) - extras;
  if (p < TreatmentSequence::kMinPeriods) {
    throw std::invalid_argument("coefficient vector too short for the model form");
  }
  ModelParams params;
  params.mu = theta[0];
  params.beta = theta.segment(1, p);
  params.tau = theta[1 + p];
  if (form.include_carryover) params.rho = theta[2 + p];
  return params;
}

Eigen::MatrixXd build_design_matrix(const TreatmentSequence& seq, ModelForm form) {
  const int p = seq.periods();
  const int cols = form.columns(p);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(p, cols);
  for (int i = 0; i < p; ++i) {
    X(i, 0) = 1.0;
    X(i, 1 + i) = 1.0;
    X(i, 1 + p) = phi_code(seq.at(i));
    if (form.include_carryover && i >= 1) {
      X(i, 2 + p) = phi_code(seq.at(i - 1));
    }
  }
  return X;
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta) {
  if (X.cols() != theta.size()) {
    throw std::invalid_argument("design matrix has " + std::to_string(X.cols()) +
                                " columns but theta has " + std::to_string(theta.size()) +
                                " entries");
  }
  return X * theta;
}

Eigen::VectorXd mean_response(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
}

Eigen::VectorXd logit(const Eigen::VectorXd& mu) {
  return mu.unaryExpr([](double m) { return std::log(m / (1.0 - m)); });
}

Eigen::VectorXd variance_diag(const Eigen::VectorXd& mu) {
  Eigen::VectorXd a(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    a[i] = mu[i] * (1.0 - mu[i]);
    if (!(a[i] >= kDegenerateVariance)) {
      throw DegenerateMeanError("saturated mean: mu(1-mu) = " + std::to_string(a[i]) +
                                " below 1e-12 at period " + std::to_string(i + 1));
    }
  }
  return a;
}

}  // namespace xover
