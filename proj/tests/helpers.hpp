#ifndef XOVER_TESTS_HELPERS_HPP
#define XOVER_TESTS_HELPERS_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "xover/gee.hpp"
#include "xover/rng.hpp"
#include "xover/sequence.hpp"

namespace xover::test {

// Uniform draw from the B1-style box (carryover form).
inline ModelParams random_params(SubstreamRng& rng, int periods, bool carryover = true) {
  ModelParams params;
  params.mu = rng.next_uniform(-0.5, 0.5);
  params.beta = Eigen::VectorXd(periods);
  for (int i = 0; i < periods; ++i) params.beta[i] = rng.next_uniform(-1.0, 1.0);
  params.tau = rng.next_uniform(-1.5, 1.5);
  if (carryover) params.rho = rng.next_uniform(-1.0, 1.0);
  return params;
}

// Random sub-support of the universe with at least `min_size` sequences.
inline std::vector<TreatmentSequence> random_support(SubstreamRng& rng, int periods,
                                                     int min_size) {
  const auto universe = all_sequences(periods);
  std::vector<TreatmentSequence> out;
  while (static_cast<int>(out.size()) < min_size) {
    out.clear();
    for (const auto& seq : universe) {
      if (rng.next_u01() < 0.5) out.push_back(seq);
    }
  }
  return out;
}

// Random interior point of the simplex.
inline Eigen::VectorXd random_weights(SubstreamRng& rng, int size) {
  Eigen::VectorXd w(size);
  for (int i = 0; i < size; ++i) w[i] = -std::log(1.0 - rng.next_u01());
  return w / w.sum();
}

inline WorkingCorrelation random_structure(SubstreamRng& rng) {
  const double u = rng.next_u01();
  if (u < 1.0 / 3) return WorkingCorrelation::independent();
  if (u < 2.0 / 3) return WorkingCorrelation::compound_symmetric(rng.next_uniform(-0.2, 0.8));
  return WorkingCorrelation::ar1(rng.next_uniform(-0.6, 0.8));
}

}  // namespace xover::test

#endif  // XOVER_TESTS_HELPERS_HPP
