#pragma once

// The simulate / check / compare commands behind the CLI.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spinrs/checks.hpp"
#include "spinrs/config.hpp"

namespace spinrs {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kBreakdown = 3;
inline constexpr int kCheckFailed = 4;
}  // namespace exit_code

/// sup_t (|q_a - q_b|_inf + |g_a - g_b|_F) over the samples present in both.
double trajectory_distance(const Trajectory& a, const Trajectory& b);

struct SimulateOutcome {
  std::vector<Trajectory> runs;
  std::string summary_json;
  int exit_code = exit_code::kOk;
};

/// Runs the configured solver(s) without touching the filesystem.
SimulateOutcome simulate(const RunConfig& cfg);

/// Writes trajectory_<solver>.csv and summary.json into out_dir.
int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out);

int cmd_check(const std::string& suite, const CheckOptions& options, std::ostream& out);

struct CompareOptions {
  std::vector<double> rtols;
  bool timing = true;
};

/// Accuracy and cost of RK45 at each rtol and of both factorization backends,
/// measured against an RK45 reference at rtol 1e-13. Prints a text table and
/// writes compare.json into out_dir when given.
int cmd_compare(const RunConfig& cfg, const CompareOptions& options,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out);

}  // namespace spinrs
