// Command-line driver: Monte Carlo efficiency studies plus single-shot
// optimal-allocation and variance queries for scripting.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xover/catalog.hpp"
#include "xover/errors.hpp"
#include "xover/gee.hpp"
#include "xover/optimize.hpp"
#include "xover/report.hpp"
#include "xover/study.hpp"
#include "xover/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

using nlohmann::json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

xover::WorkingCorrelation parse_correlation(const std::string& text, double default_alpha) {
  // bare "cs" / "ar1" pick up the parameter space's alpha
  if (text == "cs") return xover::WorkingCorrelation::compound_symmetric(default_alpha);
  if (text == "ar1") return xover::WorkingCorrelation::ar1(default_alpha);
  return xover::WorkingCorrelation::parse(text);
}

xover::WorkingCorrelation correlation_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ind") return xover::WorkingCorrelation::independent();
  const double alpha = j.at("alpha").get<double>();
  if (kind == "cs") return xover::WorkingCorrelation::compound_symmetric(alpha);
  if (kind == "ar1") return xover::WorkingCorrelation::ar1(alpha);
  throw std::invalid_argument("unknown correlation kind \"" + kind + "\"");
}

xover::ParameterSpace space_from_json(const json& j) {
  if (j.is_string()) return xover::builtin_space(j.get<std::string>());
  xover::ParameterSpace space;
  space.name = j.value("name", "inline");
  const auto interval = [&](const char* key) {
    const auto& arr = j.at(key);
    return xover::Interval{arr.at(0).get<double>(), arr.at(1).get<double>()};
  };
  space.mu = interval("mu");
  space.beta = interval("beta");
  space.tau = interval("tau");
  if (j.contains("rho")) space.rho = interval("rho");
  space.alpha = j.value("alpha", 0.0);
  space.anchor_first_beta = j.value("anchor_first_beta", false);
  return space;
}

// accepts "ABB+BAA" and, where commas are unambiguous, "ABB,BAA"
std::vector<xover::TreatmentSequence> parse_support(const std::string& text) {
  std::vector<xover::TreatmentSequence> out;
  for (const auto& part : split(text, '+')) {
    for (const auto& tok : split(part, ',')) {
      out.push_back(xover::TreatmentSequence::parse(tok));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty support \"" + text + "\"");
  return out;
}

// A design token is a catalog name ("d4"), an inline equal-weight support
// ("ABB+BAA"), or an optimized inline support ("opt:ABB+BAA").
xover::DesignCatalogEntry parse_design_token(const std::string& token, int periods) {
  if (token.rfind("opt:", 0) == 0) {
    return {token, parse_support(token.substr(4)), true};
  }
  if (token.find('+') != std::string::npos) {
    return {token, parse_support(token), false};
  }
  return xover::builtin_design(token, periods);
}

Eigen::VectorXd parse_theta(const std::string& text) {
  const auto parts = split(text, ',');
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::size_t used = 0;
    theta[static_cast<Eigen::Index>(i)] = std::stod(parts[i], &used);
    if (used != parts[i].size()) {
      throw std::invalid_argument("bad theta entry \"" + parts[i] + "\"");
    }
  }
  return theta;
}

xover::ModelParams params_from_theta(const std::string& text, int periods,
                                     xover::ModelForm form) {
  const Eigen::VectorXd theta = parse_theta(text);
  if (theta.size() != form.columns(periods)) {
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) +
                                " entries; expected " + std::to_string(form.columns(periods)) +
                                " (mu, beta_1..beta_p, tau" +
                                (form.include_carryover ? ", rho)" : ")"));
  }
  return xover::ModelParams::unpack(theta, form);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void print_report_table(const xover::EfficiencyReport& report, std::ostream& out) {
  out << "space=" << report.space << " corr=" << report.correlation;
  if (!report.truth.empty()) out << " truth=" << report.truth;
  out << " target=" << report.target << " form=" << report.form
      << " draws=" << report.n_draws << " seed=" << report.seed << " m=" << report.eff_exponent
      << "\n";
  char line[128];
  for (const auto& d : report.designs) {
    std::snprintf(line, sizeof line, "  %-10s (%.4f, %.4f)\n", d.name.c_str(), d.min_eff,
                  d.median_eff);
    out << line;
  }
  out << "  mean optimal allocation:";
  for (const auto& [seq, w] : report.average_optimal_allocation) {
    std::snprintf(line, sizeof line, " %s=%.4f", seq.c_str(), w);
    out << line;
  }
  out << "\n";
}

struct StudyCli {
  int periods = 2;
  bool no_carryover = false;
  std::string space = "B1";
  std::string corr = "cs";
  std::string truth;
  std::string target = "direct";
  std::string designs;
  int draws = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format;
  int eff_exponent = 0;
  int threads = 0;
  std::string zstar_objective = "sandwich";
};

int run_study_command(const StudyCli& cli, const json& config, const CLI::App* app) {
  const auto given = [&](const std::string& flag) { return app->count(flag) > 0; };

  xover::StudyRequest req;
  std::string out_path, format;

  // file values first, explicit flags override
  if (config.contains("periods")) req.periods = config["periods"].get<int>();
  if (given("--periods")) req.periods = cli.periods;

  bool carryover = true;
  if (config.contains("form")) {
    const auto form = config["form"].get<std::string>();
    if (form == "carryover") {
      carryover = true;
    } else if (form == "no_carryover" || form == "no-carryover") {
      carryover = false;
    } else {
      throw std::invalid_argument("bad form \"" + form + "\"");
    }
  }
  if (given("--no-carryover") && cli.no_carryover) carryover = false;
  req.form = carryover ? xover::ModelForm::carryover() : xover::ModelForm::no_carryover();

  if (config.contains("space")) req.space = space_from_json(config["space"]);
  else req.space = xover::builtin_space("B1");
  if (given("--space")) {
    if (!cli.space.empty() && cli.space.front() == '{') {
      req.space = space_from_json(json::parse(cli.space));
    } else {
      req.space = xover::builtin_space(cli.space);
    }
  }

  if (config.contains("correlation")) req.work = correlation_from_json(config["correlation"]);
  else req.work = parse_correlation(cli.corr, req.space.alpha);
  if (given("--corr")) req.work = parse_correlation(cli.corr, req.space.alpha);

  if (config.contains("truth")) req.truth = correlation_from_json(config["truth"]);
  if (given("--truth")) req.truth = parse_correlation(cli.truth, req.space.alpha);

  std::string target = config.value("target", "direct");
  if (given("--target")) target = cli.target;
  if (target == "direct") {
    req.target = xover::ContrastTarget::Direct;
  } else if (target == "carryover") {
    req.target = xover::ContrastTarget::Carryover;
  } else {
    throw std::invalid_argument("bad target \"" + target + "\"");
  }

  std::vector<std::string> design_tokens;
  if (config.contains("designs")) {
    design_tokens = config["designs"].get<std::vector<std::string>>();
  }
  if (given("--designs")) design_tokens = split(cli.designs, ',');
  if (design_tokens.empty()) {
    for (const auto& name : xover::builtin_design_names(req.periods)) {
      design_tokens.push_back(name);
    }
  }
  for (const auto& tok : design_tokens) {
    req.designs.push_back(parse_design_token(tok, req.periods));
  }

  req.n_draws = config.value("draws", 10000);
  if (given("--draws")) req.n_draws = cli.draws;
  req.seed = config.value("seed", std::uint64_t{0});
  if (given("--seed")) req.seed = cli.seed;
  if (config.contains("eff_exponent")) req.eff_exponent = config["eff_exponent"].get<int>();
  if (given("--eff-exponent")) req.eff_exponent = cli.eff_exponent;
  req.threads = config.value("threads", 0);
  if (given("--threads")) req.threads = cli.threads;

  std::string zstar = config.value("zstar_objective", "sandwich");
  if (given("--zstar-objective")) zstar = cli.zstar_objective;
  if (zstar == "sandwich") {
    req.reference = xover::ReferenceObjective::SameAsEvaluation;
  } else if (zstar == "model") {
    req.reference = xover::ReferenceObjective::ModelBased;
  } else {
    throw std::invalid_argument("bad zstar objective \"" + zstar + "\"");
  }

  out_path = config.value("output", "");
  if (given("--out")) out_path = cli.out_path;
  format = config.value("format", "");
  if (given("--format")) format = cli.format;
  if (format.empty() && !out_path.empty()) {
    format = out_path.size() > 5 && out_path.substr(out_path.size() - 5) == ".json" ? "json"
                                                                                    : "csv";
  }

  const xover::EfficiencyReport report = xover::run_study(req);
  print_report_table(report, std::cout);
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    if (!file) throw std::invalid_argument("cannot open output file \"" + out_path + "\"");
    if (format == "json") {
      xover::write_json(report, file, utc_timestamp());
    } else {
      xover::write_csv(report, file);
    }
    std::cout << "report written to " << out_path << "\n";
  }
  return kExitOk;
}

struct SingleCli {
  int periods = 2;
  bool no_carryover = false;
  std::string theta;
  std::string corr = "ind";
  std::string truth;
  std::string target = "direct";
  std::string support;
  std::string design;
  double tol = 1e-6;
  int max_iters = 10000;
};

int run_optimize_command(const SingleCli& cli) {
  const auto form =
      cli.no_carryover ? xover::ModelForm::no_carryover() : xover::ModelForm::carryover();
  xover::OptimizationProblem problem;
  problem.form = form;
  problem.params = params_from_theta(cli.theta, cli.periods, form);
  problem.work = parse_correlation(cli.corr, 0.0);
  if (!cli.truth.empty()) problem.truth = parse_correlation(cli.truth, 0.0);
  problem.target =
      cli.target == "carryover" ? xover::ContrastTarget::Carryover : xover::ContrastTarget::Direct;
  problem.support =
      cli.support.empty() ? xover::all_sequences(cli.periods) : parse_support(cli.support);

  xover::OptimizationOptions options;
  options.kkt_tol = cli.tol;
  options.max_iters = cli.max_iters;
  const xover::OptimizationResult result = xover::optimize_allocation(problem, options);

  std::cout << "optimal allocation (variance " << xover::format_sig12(result.objective)
            << ", kkt gap " << xover::format_sig12(result.kkt_gap) << ", "
            << result.iterations << " iterations, "
            << (result.converged ? "converged" : "NOT converged") << "):\n";
  char line[64];
  for (std::size_t i = 0; i < problem.support.size(); ++i) {
    const double w = result.weights[static_cast<Eigen::Index>(i)];
    if (w > 5e-5) {
      std::snprintf(line, sizeof line, "  %-8s %.4f\n", problem.support[i].str().c_str(), w);
      std::cout << line;
    }
  }
  return result.converged ? kExitOk : kExitNumerical;
}

int run_variance_command(const SingleCli& cli) {
  const auto form =
      cli.no_carryover ? xover::ModelForm::no_carryover() : xover::ModelForm::carryover();
  const xover::ModelParams params = params_from_theta(cli.theta, cli.periods, form);
  const auto work = parse_correlation(cli.corr, 0.0);
  std::optional<xover::WorkingCorrelation> truth;
  if (!cli.truth.empty()) truth = parse_correlation(cli.truth, 0.0);
  const auto target =
      cli.target == "carryover" ? xover::ContrastTarget::Carryover : xover::ContrastTarget::Direct;

  // design: catalog name, "AB+BA" (equal weights) or "AB:0.5,BA:0.5"
  std::optional<xover::AllocationDesign> design;
  if (cli.design.find(':') != std::string::npos) {
    std::vector<xover::TreatmentSequence> support;
    std::vector<double> weights;
    for (const auto& part : split(cli.design, ',')) {
      const auto colon = part.find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument("bad weighted design entry \"" + part + "\"");
      }
      support.push_back(xover::TreatmentSequence::parse(part.substr(0, colon)));
      weights.push_back(std::stod(part.substr(colon + 1)));
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) w[static_cast<Eigen::Index>(i)] = weights[i];
    design.emplace(std::move(support), std::move(w));
  } else if (cli.design.find('+') != std::string::npos) {
    design = xover::AllocationDesign::equal_weights(parse_support(cli.design));
  } else {
    design = xover::AllocationDesign::equal_weights(
        xover::builtin_design(cli.design, cli.periods).support);
  }

  const xover::VarianceResult result =
      xover::evaluate_design(*design, params, work, truth, target, form);
  if (!result.estimable) {
    std::cout << "NOT-ESTIMABLE\n";
  } else {
    std::cout << xover::format_sig12(result.contrast_variance) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally optimal two-treatment crossover designs for binary responses"};
  app.set_version_flag("--version", xover::kVersion);
  app.require_subcommand(1);

  StudyCli study;
  std::string config_path;
  auto* study_cmd = app.add_subcommand("study", "Monte Carlo efficiency study over a parameter box");
  study_cmd->add_option("--periods,-p", study.periods, "number of periods (2..8)");
  study_cmd->add_flag("--no-carryover", study.no_carryover, "fit the model without carryover");
  study_cmd->add_option("--space", study.space, "built-in space (B1..B6, senn) or inline JSON box");
  study_cmd->add_option("--corr", study.corr, "working correlation: ind, cs[:a], ar1[:a]");
  study_cmd->add_option("--truth", study.truth, "true correlation for misspecification runs");
  study_cmd->add_option("--target", study.target, "direct | carryover");
  study_cmd->add_option("--designs", study.designs,
                        "comma list: catalog names, ABB+BAA, opt:ABB+BAA");
  study_cmd->add_option("--draws", study.draws, "Monte Carlo draws (default 10000)");
  study_cmd->add_option("--seed", study.seed, "RNG seed (default 0)");
  study_cmd->add_option("--out", study.out_path, "report file path");
  study_cmd->add_option("--format", study.format, "csv | json (default by extension)");
  study_cmd->add_option("--eff-exponent", study.eff_exponent,
                        "override the efficiency exponent m");
  study_cmd->add_option("--threads", study.threads, "worker threads (0 = hardware)");
  study_cmd->add_option("--zstar-objective", study.zstar_objective,
                        "reference optimum objective in misspecification runs: sandwich | model");
  study_cmd->add_option("--config", config_path, "JSON config file; flags override its values");

  SingleCli opt;
  auto* opt_cmd = app.add_subcommand("optimize", "single-shot locally optimal allocation");
  opt_cmd->add_option("--periods,-p", opt.periods, "number of periods")->required();
  opt_cmd->add_flag("--no-carryover", opt.no_carryover, "fit the model without carryover");
  opt_cmd->add_option("--theta", opt.theta, "mu,beta_1..beta_p,tau[,rho]")->required();
  opt_cmd->add_option("--corr", opt.corr, "working correlation")->required();
  opt_cmd->add_option("--truth", opt.truth, "true correlation (sandwich objective)");
  opt_cmd->add_option("--target", opt.target, "direct | carryover");
  opt_cmd->add_option("--support", opt.support, "restrict support, e.g. ABB+BAA");
  opt_cmd->add_option("--tol", opt.tol, "relative KKT tolerance");
  opt_cmd->add_option("--max-iters", opt.max_iters, "iteration budget");

  SingleCli var;
  auto* var_cmd = app.add_subcommand("variance", "contrast variance of a fixed design");
  var_cmd->add_option("--periods,-p", var.periods, "number of periods")->required();
  var_cmd->add_flag("--no-carryover", var.no_carryover, "fit the model without carryover");
  var_cmd->add_option("--theta", var.theta, "mu,beta_1..beta_p,tau[,rho]")->required();
  var_cmd->add_option("--corr", var.corr, "working correlation")->required();
  var_cmd->add_option("--truth", var.truth, "true correlation (sandwich variance)");
  var_cmd->add_option("--target", var.target, "direct | carryover");
  var_cmd->add_option("--design", var.design, "catalog name, AB+BA, or AB:0.5,BA:0.5")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (study_cmd->parsed()) {
      json config = json::object();
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::invalid_argument("cannot read config \"" + config_path + "\"");
        in >> config;
      }
      return run_study_command(study, config, study_cmd);
    }
    if (opt_cmd->parsed()) return run_optimize_command(opt);
    if (var_cmd->parsed()) return run_variance_command(var);
  } catch (const xover::NotEstimableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const xover::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
