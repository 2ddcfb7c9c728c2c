#include "xover/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xover/errors.hpp"

namespace xover {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEstimableTol = 1e-8;
constexpr int kWarmupIters = 200;
constexpr double kWarmupExitGap = 1e-2;  // relative KKT gap to hand over to refinement

Eigen::MatrixXd weighted_sum(const std::vector<Eigen::MatrixXd>& parts,
                             const Eigen::VectorXd& w) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(parts.front().rows(), parts.front().cols());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out += w[static_cast<Eigen::Index>(k)] * parts[k];
  }
  return out;
}

// State shared by the objective, gradient and Hessian at a fixed weight
// vector. u = B^+ c; for the sandwich objective also v = B^+ S u with
// S the weighted meat.
struct Evaluation {
  double value = kInf;
  bool estimable = false;
  Eigen::MatrixXd B_pinv;
  Eigen::VectorXd u;
  Eigen::MatrixXd meat_sum;  // sandwich only
  Eigen::VectorXd v;         // sandwich only
};

Evaluation evaluate(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                    const Eigen::VectorXd& c) {
  Evaluation ev;
  const Eigen::MatrixXd B = weighted_sum(atoms.bread, w);
  ev.B_pinv = pseudo_inverse(B);
  ev.u = ev.B_pinv * c;
  if ((B * ev.u - c).cwiseAbs().maxCoeff() > kEstimableTol) {
    return ev;  // not estimable: objective stays +inf
  }
  ev.estimable = true;
  if (!atoms.has_meat()) {
    ev.value = c.dot(ev.u);
  } else {
    ev.meat_sum = weighted_sum(atoms.meat, w);
    ev.v = ev.B_pinv * (ev.meat_sum * ev.u);
    ev.value = ev.u.dot(ev.meat_sum * ev.u);
  }
  return ev;
}

// d_k = -(gradient), one entry per atom. For the model-based objective
// d_k = u' G_k u >= 0; for the sandwich d_k = 2 u' G_k v - u' S_k u.
Eigen::VectorXd descent_from(const SequenceAtoms& atoms, const Evaluation& ev) {
  const int s = atoms.size();
  Eigen::VectorXd d(s);
  for (int k = 0; k < s; ++k) {
    const auto& G = atoms.bread[static_cast<std::size_t>(k)];
    if (!atoms.has_meat()) {
      d[k] = ev.u.dot(G * ev.u);
    } else {
      const auto& S = atoms.meat[static_cast<std::size_t>(k)];
      d[k] = 2.0 * ev.u.dot(G * ev.v) - ev.u.dot(S * ev.u);
    }
  }
  return d;
}

// Hessian of the objective in the weights. Exact for both objectives;
// indefinite directions are possible for the sandwich and are shifted out
// by the Newton caller.
Eigen::MatrixXd hessian_from(const SequenceAtoms& atoms, const Evaluation& ev) {
  const int s = atoms.size();
  const int m = atoms.m;
  Eigen::MatrixXd Gu(m, s);
  for (int k = 0; k < s; ++k) Gu.col(k) = atoms.bread[static_cast<std::size_t>(k)] * ev.u;
  if (!atoms.has_meat()) {
    return 2.0 * Gu.transpose() * ev.B_pinv * Gu;
  }
  Eigen::MatrixXd Gv(m, s), Su(m, s);
  for (int k = 0; k < s; ++k) {
    Gv.col(k) = atoms.bread[static_cast<std::size_t>(k)] * ev.v;
    Su.col(k) = atoms.meat[static_cast<std::size_t>(k)] * ev.u;
  }
  const Eigen::MatrixXd T1 = Gu.transpose() * ev.B_pinv * Gv;
  const Eigen::MatrixXd T2 = Gu.transpose() * ev.B_pinv * Su;
  const Eigen::MatrixXd T3 =
      Gu.transpose() * (ev.B_pinv * ev.meat_sum * ev.B_pinv) * Gu;
  Eigen::MatrixXd H = 2.0 * (T1 + T1.transpose()) - 2.0 * (T2 + T2.transpose()) + 2.0 * T3;
  return 0.5 * (H + H.transpose());
}

double kkt_gap_of(const Eigen::VectorXd& d, double objective) {
  return std::max(0.0, d.maxCoeff() - objective);
}

// Golden-section line search for the pairwise transfer w + t (e_to - e_from),
// t in [0, w_from]. Returns the best (value, t), considering the full
// transfer endpoint so a weight can hit exactly zero.
std::pair<double, double> pair_line_search(const SequenceAtoms& atoms, const Eigen::VectorXd& c,
                                           const Eigen::VectorXd& w, int from, int to) {
  const auto value_at = [&](double t) {
    Eigen::VectorXd trial = w;
    trial[from] -= t;
    trial[to] += t;
    return evaluate(atoms, trial, c).value;
  };
  double a = 0.0;
  double b = w[from];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = value_at(x1);
  double f2 = value_at(x2);
  for (int i = 0; i < 60; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = value_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = value_at(x2);
    }
  }
  const double mid = 0.5 * (a + b);
  std::pair<double, double> best{value_at(mid), mid};
  const double full = value_at(w[from]);
  if (full < best.first) best = {full, w[from]};
  return best;
}

// Weights below rel * max are cleared and the rest renormalized, provided
// estimability survives.
Eigen::VectorXd prune_weights(const SequenceAtoms& atoms, const Eigen::VectorXd& c,
                              const Eigen::VectorXd& w, double rel = 1e-12) {
  const double wmax = w.maxCoeff();
  Eigen::VectorXd trimmed = w;
  bool any = false;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0 && w[k] < rel * wmax) {
      trimmed[k] = 0.0;
      any = true;
    }
  }
  if (!any) return w;
  const double sum = trimmed.sum();
  if (sum <= 0.0) return w;
  trimmed /= sum;
  if (!std::isfinite(evaluate(atoms, trimmed, c).value)) return w;
  return trimmed;
}

// Equality-constrained Newton on the current positive support, with an
// eigenvalue shift for indefinite Hessians and active-set drops at the
// nonnegativity boundary. Polishes until the descent direction is constant
// across the support (the within-face stationarity condition).
Eigen::VectorXd newton_polish(const SequenceAtoms& atoms, const Eigen::VectorXd& c,
                              Eigen::VectorXd w, double tol, int inner_max, int& iterations) {
  w = prune_weights(atoms, c, w);
  for (int inner = 0; inner < inner_max; ++inner) {
    ++iterations;
    std::vector<int> support;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      if (w[k] > 0.0) support.push_back(static_cast<int>(k));
    }
    const Evaluation ev = evaluate(atoms, w, c);
    if (!ev.estimable) return w;
    const Eigen::VectorXd d = descent_from(atoms, ev);
    double dmax = -kInf, dmin = kInf;
    for (int k : support) {
      dmax = std::max(dmax, d[k]);
      dmin = std::min(dmin, d[k]);
    }
    if (dmax - dmin <= 0.05 * tol * ev.value) return w;

    Eigen::MatrixXd H = hessian_from(atoms, ev);
    const int ns = static_cast<int>(support.size());
    Eigen::MatrixXd Hss(ns, ns);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < ns; ++j) Hss(i, j) = H(support[i], support[j]);
    const Eigen::MatrixXd centring =
        Eigen::MatrixXd::Identity(ns, ns) - Eigen::MatrixXd::Constant(ns, ns, 1.0 / ns);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spec(centring * Hss * centring);
    if (spec.info() != Eigen::Success) return w;
    const double ev_min = spec.eigenvalues().minCoeff();
    if (ev_min < 0.0) {
      Hss += (1e-8 - ev_min) * Eigen::MatrixXd::Identity(ns, ns);
    }

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ns + 1, ns + 1);
    K.topLeftCorner(ns, ns) = Hss;
    K.col(ns).head(ns).setOnes();
    K.row(ns).head(ns).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ns + 1);
    for (int i = 0; i < ns; ++i) rhs[i] = d[support[i]];  // = -gradient
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd dw = sol.head(ns);
    if (!dw.allFinite()) return w;

    // step length to the nonnegativity boundary
    double t_bound = kInf;
    int blocker = -1;
    for (int i = 0; i < ns; ++i) {
      if (dw[i] < 0.0) {
        const double t = -w[support[i]] / dw[i];
        if (t < t_bound) {
          t_bound = t;
          blocker = support[i];
        }
      }
    }
    if (t_bound < 1e-8) {
      Eigen::VectorXd dropped = w;
      dropped[blocker] = 0.0;
      const double sum = dropped.sum();
      if (sum > 0.0) {
        dropped /= sum;
        if (std::isfinite(evaluate(atoms, dropped, c).value)) {
          w = dropped;
          continue;
        }
      }
      return w;
    }

    double t = std::min(1.0, t_bound);
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd trial = w;
      for (int i = 0; i < ns; ++i) {
        trial[support[i]] = std::max(w[support[i]] + t * dw[i], 0.0);
      }
      const double sum = trial.sum();
      if (sum > 0.0) {
        trial /= sum;
        const double f_trial = evaluate(atoms, trial, c).value;
        if (std::isfinite(f_trial) && f_trial <= ev.value * (1.0 + 1e-14)) {
          w = trial;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      // drop the least useful supported vertex and retry once more
      if (ns > 1) {
        int k_drop = support.front();
        for (int k : support) {
          if (d[k] < d[k_drop]) k_drop = k;
        }
        Eigen::VectorXd dropped = w;
        dropped[k_drop] = 0.0;
        dropped /= dropped.sum();
        const double f_drop = evaluate(atoms, dropped, c).value;
        if (std::isfinite(f_drop) && f_drop <= ev.value * (1.0 + 1e-12)) {
          w = dropped;
          continue;
        }
      }
      return w;
    }
  }
  return w;
}

}  // namespace

Eigen::VectorXd descent_direction(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& c) {
  const Evaluation ev = evaluate(atoms, w, c);
  if (!ev.estimable) {
    throw NotEstimableError("descent direction requested at a non-estimable point");
  }
  return descent_from(atoms, ev);
}

Eigen::VectorXd descent_direction_fd(const SequenceAtoms& atoms, const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& c, double step) {
  Eigen::VectorXd d(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    Eigen::VectorXd plus = w, minus = w;
    plus[k] += step;
    minus[k] -= step;
    d[k] = -(evaluate(atoms, plus, c).value - evaluate(atoms, minus, c).value) / (2.0 * step);
  }
  return d;
}

OptimizationResult optimize_weights(const SequenceAtoms& atoms, const Eigen::VectorXd& c,
                                    const OptimizationOptions& options) {
  const int s = atoms.size();
  const bool warm_started = options.start.size() > 0;
  Eigen::VectorXd w =
      warm_started ? options.start : Eigen::VectorXd::Constant(s, 1.0 / s);
  if (warm_started && (w.size() != s || w.minCoeff() < 0.0)) {
    throw std::invalid_argument("optimize: warm start is not a weight vector");
  }

  if (!std::isfinite(evaluate(atoms, w, c).value)) {
    // spec-mandated probe: barycenter first, then every pair midpoint
    bool found = false;
    for (int i = 0; i < s && !found; ++i) {
      for (int j = i + 1; j < s && !found; ++j) {
        Eigen::VectorXd mid = Eigen::VectorXd::Zero(s);
        mid[i] = mid[j] = 0.5;
        if (std::isfinite(evaluate(atoms, mid, c).value)) {
          w = mid;
          found = true;
        }
      }
    }
    if (!found) {
      throw NotEstimableError("target contrast not estimable on this support");
    }
  }

  OptimizationResult result;
  int iterations = 0;

  // Phase 1: multiplicative sqrt-rule updates from the barycenter. A warm
  // start may sit on a face the multiplicative rule cannot leave, so it
  // hands over to the refinement loop directly.
  const auto step_state = [&] {
    const Evaluation ev = evaluate(atoms, w, c);
    return std::pair<Evaluation, Eigen::VectorXd>(ev, descent_from(atoms, ev));
  };
  auto [ev, d] = step_state();
  while (!warm_started && iterations < std::min(kWarmupIters, options.max_iters)) {
    ++iterations;
    const double gap = kkt_gap_of(d, ev.value);
    if (gap <= options.kkt_tol * ev.value) {
      result.weights = w;
      result.objective = ev.value;
      result.iterations = iterations;
      result.converged = true;
      result.kkt_gap = gap;
      return result;
    }
    if (gap <= kWarmupExitGap * ev.value && iterations > 20) break;
    Eigen::VectorXd next = w;
    for (int k = 0; k < s; ++k) {
      next[k] = w[k] * std::sqrt(std::max(d[k], 0.0) / ev.value);
    }
    const double sum = next.sum();
    if (sum > 0.0) w = next / sum;
    std::tie(ev, d) = step_state();
  }

  // Phase 2: restricted-Newton polish alternated with vertex exchange.
  while (iterations < options.max_iters) {
    w = newton_polish(atoms, c, w, options.kkt_tol, 60, iterations);
    ev = evaluate(atoms, w, c);
    d = descent_from(atoms, ev);
    const double gap = kkt_gap_of(d, ev.value);
    if (gap <= options.kkt_tol * ev.value) {
      result.weights = w;
      result.objective = ev.value;
      result.iterations = iterations;
      result.converged = true;
      result.kkt_gap = gap;
      return result;
    }
    // bring in the most violating vertex by a pairwise transfer from the
    // least useful supported one
    int to = 0;
    for (int k = 1; k < s; ++k) {
      if (d[k] > d[to]) to = k;
    }
    int from = -1;
    for (int k = 0; k < s; ++k) {
      if (k != to && w[k] > 0.0 && (from < 0 || d[k] < d[from])) from = k;
    }
    if (from < 0) break;
    ++iterations;
    const auto [f_best, t_best] = pair_line_search(atoms, c, w, from, to);
    if (f_best < ev.value) {
      w[from] -= t_best;
      w[to] += t_best;
      w = w.cwiseMax(0.0);
      w /= w.sum();
    } else if (w[to] == 0.0) {
      // reseed a vanished vertex the certificate still wants
      w[to] = 1e-8;
      w /= w.sum();
    }
  }

  ev = evaluate(atoms, w, c);
  d = descent_from(atoms, ev);
  result.weights = w;
  result.objective = ev.value;
  result.iterations = iterations;
  result.kkt_gap = kkt_gap_of(d, ev.value);
  result.converged = result.kkt_gap <= options.kkt_tol * ev.value;
  return result;
}

OptimizationResult optimize_allocation(const OptimizationProblem& problem,
                                       const OptimizationOptions& options) {
  if (problem.support.empty()) throw std::invalid_argument("optimize: empty support");
  const int p = problem.support.front().periods();
  const SequenceAtoms atoms =
      make_atoms(problem.support, problem.params, problem.work, problem.truth, problem.form);
  const Eigen::VectorXd c = contrast_selector(problem.target, p, problem.form);
  return optimize_weights(atoms, c, options);
}

std::uint64_t grid_lattice_size(int support_size, double resolution) {
  const auto k = static_cast<std::uint64_t>(std::llround(1.0 / resolution));
  // C(k + s - 1, s - 1), saturating
  std::uint64_t n = 1;
  for (std::uint64_t i = 1; i < static_cast<std::uint64_t>(support_size); ++i) {
    const std::uint64_t num = k + i;
    if (n > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    n = n * num / i;
  }
  return n;
}

OptimizationResult grid_oracle(const OptimizationProblem& problem, double resolution) {
  if (problem.support.empty()) throw std::invalid_argument("grid_oracle: empty support");
  if (!(resolution > 0.0 && resolution <= 1.0)) {
    throw std::invalid_argument("grid_oracle: resolution must be in (0, 1]");
  }
  const auto k = static_cast<long long>(std::llround(1.0 / resolution));
  if (std::abs(k * resolution - 1.0) > 1e-9) {
    throw std::invalid_argument("grid_oracle: resolution must divide 1 evenly");
  }
  const int s = static_cast<int>(problem.support.size());
  const std::uint64_t lattice = grid_lattice_size(s, resolution);
  if (lattice > 10'000'000ull) {
    throw ComplexityGuardError("grid oracle lattice has " + std::to_string(lattice) +
                               " points (limit 1e7)");
  }

  const int p = problem.support.front().periods();
  const SequenceAtoms atoms =
      make_atoms(problem.support, problem.params, problem.work, problem.truth, problem.form);
  const Eigen::VectorXd c = contrast_selector(problem.target, p, problem.form);

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(s);
  Eigen::VectorXd best_w;
  double best_value = kInf;
  Eigen::VectorXd w(s);
  // recursive enumeration of compositions of k into s nonnegative parts
  auto visit = [&](auto&& self, int position, long long remaining) -> void {
    if (position == s - 1) {
      counts[position] = static_cast<double>(remaining);
      w = counts / static_cast<double>(k);
      const double value = evaluate(atoms, w, c).value;
      if (value < best_value) {
        best_value = value;
        best_w = w;
      }
      return;
    }
    for (long long take = 0; take <= remaining; ++take) {
      counts[position] = static_cast<double>(take);
      self(self, position + 1, remaining - take);
    }
  };
  visit(visit, 0, k);

  if (!best_w.size()) {
    throw NotEstimableError("grid oracle: no lattice point is estimable");
  }
  OptimizationResult result;
  result.weights = best_w;
  result.objective = best_value;
  result.iterations = static_cast<int>(std::min<std::uint64_t>(
      lattice, static_cast<std::uint64_t>(std::numeric_limits<int>::max())));
  result.converged = true;
  const Evaluation ev = evaluate(atoms, best_w, c);
  result.kkt_gap = kkt_gap_of(descent_from(atoms, ev), ev.value);
  return result;
}

}  // namespace xover
