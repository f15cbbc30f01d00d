// spinrs: simulate spin Ruijsenaars-Schneider flows, compare solvers and run
// the r-matrix / bracket property suites.
//
//   spinrs simulate --config run.json --out-dir out
//   spinrs check --suite all --n 2 --pi-prime full --samples 1000
//   spinrs compare --config run.json --rtol 1e-6,1e-8,1e-10

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spinrs/commands.hpp"
#include "spinrs/errors.hpp"

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw spinrs::ConfigError("invalid number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::optional<std::vector<int>> parse_pi_prime(const std::string& s, int n) {
  if (s == "full") return std::nullopt;
  if (s == "empty" || s.empty()) return std::vector<int>{};
  std::vector<int> out;
  for (double v : parse_list(s)) {
    const int k = static_cast<int>(v);
    if (k != v || k < 1 || k > n) throw spinrs::ConfigError("--pi-prime: index out of range");
    out.push_back(k);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin Ruijsenaars-Schneider simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  auto* simulate = app.add_subcommand("simulate", "Integrate a configured run and write CSV + summary");
  simulate->add_option("--config", config_path, "Run configuration (JSON)")->required();
  simulate->add_option("--out-dir", out_dir, "Output directory");

  std::string suite = "all", pi_prime = "full";
  spinrs::CheckOptions check_opts;
  bool negative = false;
  auto* check = app.add_subcommand("check", "Run a randomized property suite");
  check->add_option("--suite", suite, "skew | equivariance | mdybe | commute | jacobi | theta | all");
  check->add_option("--n", check_opts.n, "N of SL(N+1)");
  check->add_option("--pi-prime", pi_prime, "\"full\", \"empty\" or a list such as 1,3");
  check->add_option("--kappa", check_opts.kappa, "Scale of the invariant K");
  check->add_option("--seed", check_opts.seed, "Random seed");
  check->add_option("--samples", check_opts.samples, "Samples per check");
  check->add_flag("--negative-control", negative, "Corrupt each identity; every check must then fail");

  std::string rtol_list, compare_out;
  bool no_timing = false;
  auto* compare = app.add_subcommand("compare", "Accuracy/cost table of RK45 vs the factorization solver");
  compare->add_option("--config", config_path, "Run configuration (JSON)")->required();
  compare->add_option("--rtol", rtol_list, "Comma separated RK45 tolerances")->required();
  compare->add_option("--out-dir", compare_out, "Directory for compare.json");
  compare->add_flag("--no-timing", no_timing, "Omit wall-clock times (deterministic output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spinrs::exit_code::kConfig;
  }

  try {
    if (*simulate) {
      return spinrs::cmd_simulate(spinrs::load_config(config_path), out_dir, std::cout);
    }
    if (*check) {
      check_opts.pi_prime = parse_pi_prime(pi_prime, check_opts.n);
      check_opts.negative_control = negative;
      return spinrs::cmd_check(suite, check_opts, std::cout);
    }
    spinrs::CompareOptions co;
    co.rtols = parse_list(rtol_list);
    co.timing = !no_timing;
    std::optional<std::filesystem::path> dir;
    if (!compare_out.empty()) dir = compare_out;
    return spinrs::cmd_compare(spinrs::load_config(config_path), co, dir, std::cout);
  } catch (const spinrs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spinrs::exit_code::kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spinrs::exit_code::kConfig;
  } catch (const spinrs::SingularityError& e) {
    std::cerr << "breakdown: " << e.what() << "\n";
    return spinrs::exit_code::kBreakdown;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
