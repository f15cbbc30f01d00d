#pragma once

// Run configuration (JSON), trajectory CSV and atomic file output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spinrs/factorization_solver.hpp"

namespace spinrs {

struct RunConfig {
  int n = 1;
  /// Empty optional means the full set of simple roots.
  std::optional<std::vector<int>> pi_prime;
  double kappa = 0.5;

  struct Power {
    int power;
    double re;
    double im;
  };
  struct Character {
    int index;
    double re;
    double im;
  };
  std::vector<Power> power_traces;
  std::vector<Character> characters;

  std::vector<double> q;
  std::vector<double> q_im;  // empty in hermitian mode
  std::vector<std::vector<double>> g_re;
  std::vector<std::vector<double>> g_im;

  double t0 = 0.0;
  double t1 = 1.0;
  int samples = 101;

  std::string method = "rk45";  // rk45 | rk4 | factorization | both
  double rtol = 1e-9;
  double atol = 1e-12;
  double step = 1e-3;
  long max_steps = 1'000'000;
  std::string gauge = "matched";  // matched | transport
  std::string normalization = "unit_diagonal";  // unit_diagonal | unit_norm

  std::string mode = "hermitian";  // hermitian | complex
  std::uint64_t seed = 12345;
};

/// Throws ConfigError on malformed input, unknown keys or invalid values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON form: every field, fixed key order, 2-space indent.
std::string serialize_config(const RunConfig& cfg);

RMatrixSpec make_spec(const RunConfig& cfg);
HamiltonianSpec make_hamiltonian(const RunConfig& cfg);
/// Initial state; ConfigError if projection onto the constraints moves it by
/// more than 1e-6 or if hermitian mode data is not Hermitian / real.
RSState make_state(const RunConfig& cfg);
std::vector<double> time_grid(const RunConfig& cfg);
IntegratorConfig make_integrator(const RunConfig& cfg);
SolveOptions make_solve_options(const RunConfig& cfg);

/// Header: t, q_0..q_n, [im_q_0..im_q_n], re_g_00, im_g_00, ..., c_1..c_n,
/// [im_c_1..im_c_n]; bracketed columns only in complex mode.
std::vector<std::string> csv_header(int n, bool complex_mode);
std::string trajectory_csv(const Trajectory& traj, bool complex_mode);

struct CsvRow {
  double t;
  RSState state;
};
std::vector<CsvRow> parse_trajectory_csv(const std::string& text, int n, bool complex_mode);

/// Writes via a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace spinrs
