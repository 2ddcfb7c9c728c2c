#include "xover/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include <json.hpp>

namespace xover {

double round_sig12(double value) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", value);
  return std::strtod(buf, nullptr);
}

std::string format_sig12(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", round_sig12(value));
  return buf;
}

void write_csv(const EfficiencyReport& report, std::ostream& out) {
  out << "design,space,correlation,target,min_eff,median_eff\n";
  for (const auto& d : report.designs) {
    out << d.name << ',' << report.space << ',' << report.correlation << ',' << report.target
        << ',' << format_sig12(d.min_eff) << ',' << format_sig12(d.median_eff) << '\n';
  }
}

void write_json(const EfficiencyReport& report, std::ostream& out,
                const std::string& timestamp) {
  nlohmann::ordered_json doc;
  doc["space"] = report.space;
  doc["correlation"] = report.correlation;
  if (!report.truth.empty()) doc["truth"] = report.truth;
  doc["target"] = report.target;
  doc["form"] = report.form;
  doc["draws"] = report.n_draws;
  doc["seed"] = report.seed;
  doc["eff_exponent"] = report.eff_exponent;
  doc["version"] = report.version;
  doc["max_draw_efficiency"] = round_sig12(report.max_draw_efficiency);
  if (!timestamp.empty()) doc["timestamp"] = timestamp;
  nlohmann::ordered_json designs = nlohmann::ordered_json::array();
  for (const auto& d : report.designs) {
    designs.push_back({{"name", d.name},
                       {"min_eff", round_sig12(d.min_eff)},
                       {"median_eff", round_sig12(d.median_eff)}});
  }
  doc["designs"] = designs;
  nlohmann::ordered_json alloc = nlohmann::ordered_json::object();
  for (const auto& [seq, weight] : report.average_optimal_allocation) {
    alloc[seq] = round_sig12(weight);
  }
  doc["average_optimal_allocation"] = alloc;
  out << doc.dump(2) << '\n';
}

}  // namespace xover
