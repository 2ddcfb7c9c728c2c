#include "xover/catalog.hpp"

#include <stdexcept>

namespace xover {

namespace {

std::vector<TreatmentSequence> parse_all(std::initializer_list<const char*> texts) {
  std::vector<TreatmentSequence> out;
  out.reserve(texts.size());
  for (const char* t : texts) out.push_back(TreatmentSequence::parse(t));
  return out;
}

ParameterSpace wide_box(const std::string& name, double alpha) {
  return ParameterSpace{name, {-0.5, 0.5}, {-1.0, 1.0}, {-1.5, 1.5}, {-1.0, 1.0}, alpha, false};
}

ParameterSpace narrow_box(const std::string& name, double alpha) {
  return ParameterSpace{name, {-0.5, 0.5}, {-1.0, 1.0}, {-0.2, 1.5}, {-0.2, 1.0}, alpha, false};
}

}  // namespace

ParameterSpace builtin_space(const std::string& name) {
  if (name == "B1") return wide_box(name, 0.2);
  if (name == "B2") return wide_box(name, 0.4);
  if (name == "B3") return wide_box(name, 0.6);
  if (name == "B4") return narrow_box(name, 0.2);
  if (name == "B5") return narrow_box(name, 0.4);
  if (name == "B6") return narrow_box(name, 0.6);
  if (name == "senn") {
    // published confidence intervals from the asthma trial fit; single
    // period parameter, so beta_1 is anchored at zero
    ParameterSpace space;
    space.name = "senn";
    space.mu = {1.1573, 5.0893};
    space.beta = {-2.8390, 0.4932};
    space.tau = {-5.1738, -1.4029};
    space.rho = {0.0, 0.0};
    space.alpha = 0.0;
    space.anchor_first_beta = true;
    return space;
  }
  throw std::invalid_argument("unknown parameter space \"" + name + "\"");
}

std::vector<std::string> builtin_space_names() {
  return {"B1", "B2", "B3", "B4", "B5", "B6", "senn"};
}

DesignCatalogEntry builtin_design(const std::string& name, int periods) {
  const auto entry = [](std::string n, std::initializer_list<const char*> seqs,
                        bool optimized = false) {
    return DesignCatalogEntry{std::move(n), parse_all(seqs), optimized};
  };
  if (periods == 2) {
    if (name == "D1" || name == "d1" || name == "1") return entry("D1", {"AB", "BA"});
    if (name == "D2" || name == "d2" || name == "2")
      return entry("D2", {"AB", "AA", "BA", "BB"});
  } else if (periods == 3) {
    if (name == "d1") return entry("d1", {"ABB", "BAA"}, true);
    if (name == "d2") return entry("d2", {"ABB", "BAA"});
    if (name == "d3") return entry("d3", {"ABB", "AAA", "BAA", "BBB"});
    if (name == "d4") return entry("d4", {"ABB", "AAB", "BAA", "BBA"});
    if (name == "d5") return entry("d5", {"ABB", "ABA", "BAA", "BAB"});
    if (name == "d6") return entry("d6", {"AAA", "BBB"});
  } else if (periods == 4) {
    if (name == "I") return entry("I", {"AABB", "BBAA", "ABBA", "BAAB"}, true);
    if (name == "II") return entry("II", {"AABB", "BBAA", "ABBA", "BAAB"});
    if (name == "III") return entry("III", {"AABB", "BBAA"});
    if (name == "IV") return entry("IV", {"ABBA", "BAAB"});
  }
  throw std::invalid_argument("unknown design \"" + name + "\" for p = " +
                              std::to_string(periods));
}

std::vector<std::string> builtin_design_names(int periods) {
  switch (periods) {
    case 2:
      return {"D1", "D2"};
    case 3:
      return {"d1", "d2", "d3", "d4", "d5", "d6"};
    case 4:
      return {"I", "II", "III", "IV"};
    default:
      return {};
  }
}

}  // namespace xover
