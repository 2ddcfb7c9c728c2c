#include "xover/gee.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "xover/errors.hpp"

namespace xover {

namespace {
constexpr double kWeightSumTol = 1e-12;
constexpr double kPinvCutoff = 1e-10;      // relative to the largest eigenvalue
constexpr double kEstimableTol = 1e-8;     // on || M M^+ c - c ||_inf
}  // namespace

AllocationDesign::AllocationDesign(std::vector<TreatmentSequence> support_in,
                                   Eigen::VectorXd weights_in)
    : support(std::move(support_in)), weights(std::move(weights_in)) {
  if (support.empty()) throw std::invalid_argument("allocation design: empty support");
  if (static_cast<int>(support.size()) != weights.size()) {
    throw std::invalid_argument("allocation design: support/weight size mismatch");
  }
  const int p = support.front().periods();
  std::set<std::string> seen;
  for (const auto& seq : support) {
    if (seq.periods() != p) {
      throw std::invalid_argument("allocation design: sequences of mixed lengths");
    }
    if (!seen.insert(seq.str()).second) {
      throw std::invalid_argument("allocation design: duplicate sequence " + seq.str());
    }
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) {
      throw std::invalid_argument("allocation design: negative weight");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("allocation design: weights sum to " + std::to_string(sum));
  }
}

AllocationDesign AllocationDesign::equal_weights(std::vector<TreatmentSequence> support) {
  const auto n = support.size();
  return AllocationDesign(std::move(support),
                          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / n));
}

AllocationDesign AllocationDesign::dual() const {
  std::vector<TreatmentSequence> flipped;
  flipped.reserve(support.size());
  for (const auto& seq : support) flipped.push_back(seq.dual());
  return AllocationDesign(std::move(flipped), weights);
}

Eigen::VectorXd contrast_selector(ContrastTarget target, int periods, ModelForm form) {
  if (target == ContrastTarget::Carryover && !form.include_carryover) {
    throw std::invalid_argument("carryover contrast requires the carryover model form");
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(form.columns(periods));
  c[target == ContrastTarget::Direct ? tau_index(periods) : rho_index(periods)] = 1.0;
  return c;
}

SequenceAtoms SequenceAtoms::subset(const std::vector<int>& indices) const {
  SequenceAtoms out;
  out.m = m;
  out.bread.reserve(indices.size());
  if (has_meat()) out.meat.reserve(indices.size());
  for (int idx : indices) {
    out.bread.push_back(bread.at(static_cast<std::size_t>(idx)));
    if (has_meat()) out.meat.push_back(meat.at(static_cast<std::size_t>(idx)));
  }
  return out;
}

SequenceAtoms make_atoms(const std::vector<TreatmentSequence>& support,
                         const ModelParams& params, const WorkingCorrelation& work,
                         const std::optional<WorkingCorrelation>& truth, ModelForm form) {
  if (support.empty()) throw std::invalid_argument("make_atoms: empty support");
  const int p = support.front().periods();
  if (params.periods() != p) {
    throw std::invalid_argument("make_atoms: params have beta length " +
                                std::to_string(params.periods()) + " but sequences have p = " +
                                std::to_string(p));
  }
  if (form.include_carryover && !params.rho) {
    throw std::invalid_argument("make_atoms: carryover form needs a rho coefficient");
  }

  const Eigen::MatrixXd Rw = build_correlation(work, p);
  const Eigen::MatrixXd Rw_inv = Rw.inverse();
  Eigen::MatrixXd meat_kernel;  // Rw^-1 Rt Rw^-1
  const bool misspecified = truth.has_value();
  if (misspecified) {
    meat_kernel = Rw_inv * build_correlation(*truth, p) * Rw_inv;
  }

  const Eigen::VectorXd theta = params.pack();
  SequenceAtoms atoms;
  atoms.m = form.columns(p);
  atoms.bread.reserve(support.size());
  if (misspecified) atoms.meat.reserve(support.size());
  for (const auto& seq : support) {
    const Eigen::MatrixXd X = build_design_matrix(seq, form);
    const Eigen::VectorXd mu = mean_response(linear_predictor(X, theta));
    const Eigen::VectorXd sqrt_a = variance_diag(mu).cwiseSqrt();
    const Eigen::MatrixXd SX = sqrt_a.asDiagonal() * X;  // A^{1/2} X
    atoms.bread.push_back(SX.transpose() * Rw_inv * SX);
    if (misspecified) atoms.meat.push_back(SX.transpose() * meat_kernel * SX);
  }
  return atoms;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("spectral decomposition failed");
  }
  const Eigen::VectorXd& evals = eig.eigenvalues();
  const double cutoff = kPinvCutoff * std::max(evals.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals[i] > cutoff) inv[i] = 1.0 / evals[i];
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

bool is_estimable(const Eigen::MatrixXd& M, const Eigen::VectorXd& c) {
  const Eigen::VectorXd residual = M * (pseudo_inverse(M) * c) - c;
  return residual.cwiseAbs().maxCoeff() <= kEstimableTol;
}

namespace {

Eigen::MatrixXd weighted_sum(const std::vector<Eigen::MatrixXd>& parts,
                             const Eigen::VectorXd& w) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(parts.front().rows(), parts.front().cols());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out += w[static_cast<Eigen::Index>(k)] * parts[k];
  }
  return out;
}

}  // namespace

Eigen::MatrixXd information_matrix(const AllocationDesign& design, const ModelParams& params,
                                   const WorkingCorrelation& work, ModelForm form) {
  const SequenceAtoms atoms = make_atoms(design.support, params, work, std::nullopt, form);
  return weighted_sum(atoms.bread, design.weights);
}

Eigen::MatrixXd model_based_variance(const Eigen::MatrixXd& information) {
  return pseudo_inverse(information);
}

Eigen::MatrixXd sandwich_variance(const AllocationDesign& design, const ModelParams& params,
                                  const WorkingCorrelation& work, const WorkingCorrelation& truth,
                                  ModelForm form) {
  const SequenceAtoms atoms = make_atoms(design.support, params, work, truth, form);
  const Eigen::MatrixXd bread_inv = pseudo_inverse(weighted_sum(atoms.bread, design.weights));
  const Eigen::MatrixXd meat = weighted_sum(atoms.meat, design.weights);
  return bread_inv * meat * bread_inv;
}

ContrastValue contrast_variance(const Eigen::MatrixXd& full, const Eigen::MatrixXd& information,
                                ContrastTarget target, ModelForm form) {
  const int p = static_cast<int>(information.rows()) - (form.include_carryover ? 3 : 2);
  const Eigen::VectorXd c = contrast_selector(target, p, form);
  if (!is_estimable(information, c)) {
    return {std::numeric_limits<double>::quiet_NaN(), false};
  }
  return {c.dot(full * c), true};
}

VarianceResult evaluate_design(const AllocationDesign& design, const ModelParams& params,
                               const WorkingCorrelation& work,
                               const std::optional<WorkingCorrelation>& truth,
                               ContrastTarget target, ModelForm form) {
  const SequenceAtoms atoms = make_atoms(design.support, params, work, truth, form);
  const Eigen::MatrixXd information = weighted_sum(atoms.bread, design.weights);
  Eigen::MatrixXd full = pseudo_inverse(information);
  if (atoms.has_meat()) {
    full = full * weighted_sum(atoms.meat, design.weights) * full;
  }
  VarianceResult result;
  result.m = atoms.m;
  result.full_matrix = full;
  const ContrastValue cv = contrast_variance(full, information, target, form);
  result.estimable = cv.estimable;
  result.contrast_variance = cv.value;
  return result;
}

double weights_objective(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& c) {
  const Eigen::MatrixXd B = weighted_sum(atoms.bread, w);
  const Eigen::MatrixXd B_pinv = pseudo_inverse(B);
  const Eigen::VectorXd u = B_pinv * c;
  if ((B * u - c).cwiseAbs().maxCoeff() > kEstimableTol) {
    return std::numeric_limits<double>::infinity();
  }
  if (!atoms.has_meat()) return c.dot(u);
  return u.dot(weighted_sum(atoms.meat, w) * u);
}

}  // namespace xover
