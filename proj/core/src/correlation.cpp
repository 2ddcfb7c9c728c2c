#include "xover/correlation.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "xover/errors.hpp"

namespace xover {

void WorkingCorrelation::validate(int periods) const {
  switch (kind) {
    case CorrelationKind::Independent:
      return;
    case CorrelationKind::CompoundSymmetric: {
      const double lower = -1.0 / (periods - 1);
      if (!(alpha > lower && alpha < 1.0)) {
        throw InvalidCorrelationError("compound-symmetric alpha " + std::to_string(alpha) +
                                      " outside (" + std::to_string(lower) + ", 1) for p = " +
                                      std::to_string(periods));
      }
      return;
    }
    case CorrelationKind::Ar1:
      if (!(std::abs(alpha) < 1.0)) {
        throw InvalidCorrelationError("AR(1) alpha " + std::to_string(alpha) +
                                      " outside (-1, 1)");
      }
      return;
  }
  throw std::invalid_argument("unknown correlation kind");
}

std::string WorkingCorrelation::str() const {
  char buf[40];
  switch (kind) {
    case CorrelationKind::Independent:
      return "ind";
    case CorrelationKind::CompoundSymmetric:
      std::snprintf(buf, sizeof buf, "cs:%g", alpha);
      return buf;
    case CorrelationKind::Ar1:
      std::snprintf(buf, sizeof buf, "ar1:%g", alpha);
      return buf;
  }
  return "?";
}

WorkingCorrelation WorkingCorrelation::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "ind" || head == "independent") {
    if (!tail.empty()) throw std::invalid_argument("independent correlation takes no alpha");
    return independent();
  }
  double alpha = 0.0;
  if (!tail.empty()) {
    char* end = nullptr;
    alpha = std::strtod(tail.c_str(), &end);
    if (end == tail.c_str() || *end != '\0') {
      throw std::invalid_argument("bad correlation alpha \"" + tail + "\"");
    }
  } else {
    throw std::invalid_argument("correlation \"" + head + "\" needs an alpha, e.g. \"" + head +
                                ":0.2\"");
  }
  if (head == "cs") return compound_symmetric(alpha);
  if (head == "ar1") return ar1(alpha);
  throw std::invalid_argument("unknown correlation kind \"" + head + "\"");
}

Eigen::MatrixXd build_correlation(const WorkingCorrelation& corr, int periods) {
  corr.validate(periods);
  switch (corr.kind) {
    case CorrelationKind::Independent:
      return Eigen::MatrixXd::Identity(periods, periods);
    case CorrelationKind::CompoundSymmetric: {
      Eigen::MatrixXd R = Eigen::MatrixXd::Constant(periods, periods, corr.alpha);
      R.diagonal().setOnes();
      return R;
    }
    case CorrelationKind::Ar1: {
      Eigen::MatrixXd R(periods, periods);
      for (int i = 0; i < periods; ++i)
        for (int j = 0; j < periods; ++j) R(i, j) = std::pow(corr.alpha, std::abs(i - j));
      return R;
    }
  }
  throw std::invalid_argument("unknown correlation kind");
}

Eigen::MatrixXd covariance(const Eigen::VectorXd& a_diag, const Eigen::MatrixXd& R) {
  if (a_diag.size() != R.rows() || R.rows() != R.cols()) {
    throw std::invalid_argument("covariance: dimension mismatch");
  }
  const Eigen::VectorXd s = a_diag.cwiseSqrt();
  Eigen::MatrixXd V(R.rows(), R.cols());
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      // the diagonal is A itself, bit-exact
      V(i, j) = i == j ? a_diag[i] : R(i, j) * s[i] * s[j];
    }
  }
  return V;
}

}  // namespace xover
