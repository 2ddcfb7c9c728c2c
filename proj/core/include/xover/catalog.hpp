#ifndef XOVER_CATALOG_HPP
#define XOVER_CATALOG_HPP

#include <string>
#include <vector>

#include "xover/sequence.hpp"

namespace xover {

/// Closed interval; a point interval (lo == hi) is allowed.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Box of plausible parameter values from which local-optimality draws are
/// sampled. beta applies independently to each period effect; alpha is the
/// correlation value conventionally paired with the box.
struct ParameterSpace {
  std::string name;
  Interval mu;
  Interval beta;
  Interval tau;
  Interval rho;
  double alpha = 0.0;
  /// Senn-style spaces fit a single period parameter: beta_1 is pinned to 0
  /// and only beta_2..beta_p are sampled.
  bool anchor_first_beta = false;
};

/// A named candidate design: a support plus either fixed equal weights or
/// per-draw optimized weights restricted to that support.
struct DesignCatalogEntry {
  std::string name;
  std::vector<TreatmentSequence> support;
  bool optimized = false;
};

/// Built-in parameter spaces: B1..B6 and "senn".
/// Throws std::invalid_argument for unknown names.
ParameterSpace builtin_space(const std::string& name);
std::vector<std::string> builtin_space_names();

/// Built-in design catalog for p = 2 ("1","2"), p = 3 ("d1".."d6") and
/// p = 4 ("I".."IV"). Throws std::invalid_argument for unknown names or a
/// period mismatch.
DesignCatalogEntry builtin_design(const std::string& name, int periods);
std::vector<std::string> builtin_design_names(int periods);

}  // namespace xover

#endif  // XOVER_CATALOG_HPP
