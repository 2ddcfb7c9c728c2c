#ifndef XOVER_STUDY_HPP
#define XOVER_STUDY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xover/catalog.hpp"
#include "xover/gee.hpp"
#include "xover/optimize.hpp"

namespace xover {

/// Which objective the per-draw reference optimum minimizes in
/// misspecification runs. Candidates are always evaluated with the sandwich
/// variance when a truth correlation is present; SameAsEvaluation makes the
/// reference minimize that same sandwich objective, ModelBased makes it the
/// nominal (working-correlation) optimum instead.
enum class ReferenceObjective { SameAsEvaluation, ModelBased };

struct StudyRequest {
  int periods = 2;
  ModelForm form = ModelForm::carryover();
  ParameterSpace space;
  WorkingCorrelation work;
  std::optional<WorkingCorrelation> truth;
  ContrastTarget target = ContrastTarget::Direct;
  std::vector<DesignCatalogEntry> designs;
  int n_draws = 10000;
  std::uint64_t seed = 0;
  std::optional<int> eff_exponent;  // overrides m = p+3 / p+2
  int threads = 0;                  // 0 = hardware concurrency
  ReferenceObjective reference = ReferenceObjective::SameAsEvaluation;
};

struct DesignSummary {
  std::string name;
  double min_eff = 0.0;
  double median_eff = 0.0;
};

struct EfficiencyReport {
  std::vector<DesignSummary> designs;
  /// Mean optimal-design weight per universe sequence, in lexicographic
  /// sequence order.
  std::vector<std::pair<std::string, double>> average_optimal_allocation;
  double max_draw_efficiency = 0.0;  // largest per-draw efficiency seen
  int n_draws = 0;
  std::uint64_t seed = 0;
  std::string space;
  std::string correlation;
  std::string truth;  // empty when no misspecification
  std::string target;
  std::string form;
  int eff_exponent = 0;
  std::string version;
};

/// One parameter draw from the box; coordinate order mu, beta_1..beta_p,
/// tau, rho on a counter-based substream, so draw i is independent of
/// thread scheduling.
ModelParams sample_parameter(const ParameterSpace& space, int periods, ModelForm form,
                             std::uint64_t seed, std::uint64_t index);

/// The full draw list for a study of n_draws.
std::vector<ModelParams> sample_parameters(const ParameterSpace& space, int periods,
                                           ModelForm form, int n_draws, std::uint64_t seed);

/// Eq.-style efficiency: (optimal / candidate)^(1/m).
double efficiency(double candidate_variance, double optimal_variance, int m);

/// Monte Carlo design comparison: per draw, the optimal design over the
/// full 2^p universe is computed and every catalog design's variance
/// (inner-optimized when entry.optimized) is turned into an efficiency;
/// minima and medians are reported per design. Any per-draw failure aborts
/// the study (no silent skipping).
EfficiencyReport run_study(const StudyRequest& request);

/// run_study with the sandwich variance throughout (truth must be present).
EfficiencyReport misspecification_study(const StudyRequest& request);

/// The two-period Senn comparison: no-carryover form over the "senn" box,
/// designs D1 and D2, with the supplied working correlation.
EfficiencyReport senn_study(int n_draws, std::uint64_t seed, const WorkingCorrelation& work,
                            int threads = 0);

}  // namespace xover

#endif  // XOVER_STUDY_HPP
