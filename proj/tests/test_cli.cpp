#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(XOVER_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer{};
  RunResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe)) {
    result.output += buffer.data();
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("variance: still-estimable design and sandwich collapse") {
  // {AB, BA} with carryover: estimable in this marginal model, Var = 4 at theta = 0
  const auto r = run("variance -p 2 --theta 0,0,0,0,0 --corr ind --design AB+BA");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("4") != std::string::npos);

  const auto base = run("variance -p 3 --theta 0.2,0.3,-0.4,0.1,0.8,-0.5 --corr cs:0.4 "
                        "--design d2");
  const auto collapse = run("variance -p 3 --theta 0.2,0.3,-0.4,0.1,0.8,-0.5 --corr cs:0.4 "
                            "--truth cs:0.4 --design d2");
  CHECK(base.exit_code == 0);
  CHECK(base.output == collapse.output);  // truth == work changes nothing

  // pinned regression value for equal-weight d2 at this theta
  const auto sandwich = run("variance -p 3 --theta 0.2,0.3,-0.4,0.1,0.8,-0.5 --corr cs:0.4 "
                            "--truth ar1:0.4 --design d2");
  CHECK(sandwich.exit_code == 0);
  CHECK(sandwich.output.find("1.36463684382") != std::string::npos);
}

TEST_CASE("variance: NOT-ESTIMABLE diagnostic for a single-sequence design") {
  const auto r = run("variance -p 2 --theta 0,0,0,0,0 --corr ind --design AB:1.0");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("NOT-ESTIMABLE") != std::string::npos);
}

TEST_CASE("optimize: symmetric problem splits weight across dual pairs") {
  const auto r = run("optimize -p 2 --theta 0,0,0,0,0 --corr cs:0.2");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("converged") != std::string::npos);
  // all four sequences get 0.25 by symmetry
  CHECK(r.output.find("0.2500") != std::string::npos);
}

TEST_CASE("optimize: restricted support, sandwich objective") {
  const auto r = run("optimize -p 3 --theta 0.1,0.2,-0.1,0,0.5,0.3 --corr cs:0.4 "
                     "--truth ar1:0.4 --support ABB+BAA");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("kkt gap") != std::string::npos);
}

TEST_CASE("exit code 2 for config errors") {
  CHECK(run("study --space NOPE --draws 2").exit_code == 2);
  CHECK(run("study --periods 3 --designs d9 --draws 2").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);  // unknown subcommand
  CHECK(run("variance -p 2 --theta 0,0,0 --corr ind --design D2").exit_code == 2);
  CHECK(run("study --corr nope:1 --draws 2").exit_code == 2);
}

TEST_CASE("exit code 3 for numerical/not-estimable failures") {
  // single-sequence support: no simplex point estimates tau
  const auto r = run("optimize -p 2 --theta 0,0,0,0,0 --corr ind --support AB");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("not estimable") != std::string::npos);
}

TEST_CASE("study: table output and deterministic CSV across thread counts") {
  const std::string out1 = "/tmp/xover_cli_t1.csv";
  const std::string out2 = "/tmp/xover_cli_t2.csv";
  const auto r1 = run("study -p 2 --space B1 --corr cs:0.2 --designs D2 --draws 40 "
                      "--seed 5 --threads 1 --out " + out1);
  const auto r2 = run("study -p 2 --space B1 --corr cs:0.2 --designs D2 --draws 40 "
                      "--seed 5 --threads 2 --out " + out2);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  CHECK(r1.output.find("D2") != std::string::npos);
  const auto csv1 = slurp(out1);
  const auto csv2 = slurp(out2);
  CHECK(!csv1.empty());
  CHECK(csv1 == csv2);  // byte-identical regardless of --threads
  std::remove(out1.c_str());
  std::remove(out2.c_str());
}

TEST_CASE("study: JSON config file with flag overrides") {
  const std::string config_path = "/tmp/xover_cli_config.json";
  {
    std::ofstream config(config_path);
    config << R"({
      "periods": 2,
      "space": "B1",
      "correlation": {"kind": "cs", "alpha": 0.2},
      "designs": ["D2"],
      "draws": 40,
      "seed": 5,
      "threads": 1
    })";
  }
  const std::string out1 = "/tmp/xover_cli_cfg1.csv";
  const std::string out2 = "/tmp/xover_cli_cfg2.csv";
  const auto from_config = run("study --config " + config_path + " --out " + out1);
  CHECK(from_config.exit_code == 0);
  const auto overridden =
      run("study --config " + config_path + " --seed 6 --out " + out2);
  CHECK(overridden.exit_code == 0);
  CHECK(slurp(out1) != slurp(out2));  // the --seed flag overrode the file

  const auto flags_only = run("study -p 2 --space B1 --corr cs:0.2 --designs D2 "
                              "--draws 40 --seed 5 --threads 1 --out " + out2);
  CHECK(flags_only.exit_code == 0);
  CHECK(slurp(out1) == slurp(out2));  // config run == equivalent flag run
  std::remove(config_path.c_str());
  std::remove(out1.c_str());
  std::remove(out2.c_str());
}

TEST_CASE("study: JSON report format") {
  const std::string out = "/tmp/xover_cli_report.json";
  const auto r = run("study -p 2 --space senn --no-carryover --corr ind --designs D1,D2 "
                     "--draws 30 --seed 1 --out " + out);
  CHECK(r.exit_code == 0);
  const auto json_text = slurp(out);
  CHECK(json_text.find("\"space\": \"senn\"") != std::string::npos);
  CHECK(json_text.find("\"timestamp\"") != std::string::npos);
  CHECK(json_text.find("\"average_optimal_allocation\"") != std::string::npos);
  std::remove(out.c_str());
}

TEST_CASE("study: misspecification flags run end to end") {
  const auto r = run("study -p 3 --space B5 --corr cs:0.4 --truth ar1:0.4 "
                     "--designs d1,d2,d4 --draws 20 --seed 2");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("truth=ar1") != std::string::npos);
  // the model-based reference alternative is exposed
  const auto alt = run("study -p 3 --space B5 --corr cs:0.4 --truth ar1:0.4 "
                       "--designs d4 --draws 20 --seed 2 --zstar-objective model");
  CHECK(alt.exit_code == 0);
}

TEST_CASE("study: inline design tokens") {
  const auto r = run("study -p 3 --space B1 --corr ind --designs d4,ABB+BAA,opt:ABB+BAA "
                     "--draws 20 --seed 3");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("ABB+BAA") != std::string::npos);
  CHECK(r.output.find("opt:ABB+BAA") != std::string::npos);
}
