#ifndef XOVER_ERRORS_HPP
#define XOVER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xover {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A fitted mean is numerically saturated: mu*(1-mu) < 1e-12.
class DegenerateMeanError : public Error {
 public:
  explicit DegenerateMeanError(const std::string& what) : Error(what) {}
};

// Correlation parameter outside the positive-definiteness range.
class InvalidCorrelationError : public Error {
 public:
  explicit InvalidCorrelationError(const std::string& what) : Error(what) {}
};

// Requested contrast is not in the range of the information matrix.
class NotEstimableError : public Error {
 public:
  explicit NotEstimableError(const std::string& what) : Error(what) {}
};

// Spectral decomposition or other numeric kernel failed to converge.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

// Exhaustive-enumeration request would exceed the lattice budget.
class ComplexityGuardError : public Error {
 public:
  explicit ComplexityGuardError(const std::string& what) : Error(what) {}
};

}  // namespace xover

#endif  // XOVER_ERRORS_HPP
