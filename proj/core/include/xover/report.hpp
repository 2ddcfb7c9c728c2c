#ifndef XOVER_REPORT_HPP
#define XOVER_REPORT_HPP

#include <iosfwd>
#include <string>

#include "xover/study.hpp"

namespace xover {

/// Rounds to 12 significant decimal digits; CSV and JSON share this so the
/// two formats carry identical numeric values.
double round_sig12(double value);
std::string format_sig12(double value);

/// CSV schema: design, space, correlation, target, min_eff, median_eff.
/// Fully deterministic for a fixed report (no timestamp).
void write_csv(const EfficiencyReport& report, std::ostream& out);

/// JSON document with the summaries plus run metadata (seed, draws,
/// version, average optimal allocation). `timestamp` is included unless
/// empty; it is excluded from the determinism guarantee.
void write_json(const EfficiencyReport& report, std::ostream& out,
                const std::string& timestamp = "");

}  // namespace xover

#endif  // XOVER_REPORT_HPP
