#ifndef XOVER_CORRELATION_HPP
#define XOVER_CORRELATION_HPP

#include <Eigen/Dense>
#include <string>

namespace xover {

enum class CorrelationKind { Independent, CompoundSymmetric, Ar1 };

/// Within-subject correlation family with a scalar parameter.
/// Validity (positive definiteness for p periods):
///   compound symmetric: -1/(p-1) < alpha < 1
///   AR(1):              |alpha| < 1
struct WorkingCorrelation {
  CorrelationKind kind = CorrelationKind::Independent;
  double alpha = 0.0;

  static WorkingCorrelation independent() { return {CorrelationKind::Independent, 0.0}; }
  static WorkingCorrelation compound_symmetric(double alpha) {
    return {CorrelationKind::CompoundSymmetric, alpha};
  }
  static WorkingCorrelation ar1(double alpha) { return {CorrelationKind::Ar1, alpha}; }

  /// Throws InvalidCorrelationError if alpha is outside the validity range.
  void validate(int periods) const;

  /// Short form used in CLI flags and reports, e.g. "cs:0.4", "ind".
  std::string str() const;

  /// Parses the short form. Throws std::invalid_argument on bad syntax.
  static WorkingCorrelation parse(const std::string& text);

  friend bool operator==(const WorkingCorrelation&, const WorkingCorrelation&) = default;
};

/// p x p correlation matrix for the given family. Validates alpha first.
Eigen::MatrixXd build_correlation(const WorkingCorrelation& corr, int periods);

/// V = A^{1/2} R A^{1/2} for diagonal A (passed as its diagonal).
Eigen::MatrixXd covariance(const Eigen::VectorXd& a_diag, const Eigen::MatrixXd& R);

}  // namespace xover

#endif  // XOVER_CORRELATION_HPP
