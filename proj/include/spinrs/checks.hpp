#pragma once

// Randomized property suites for the r-matrix identities and the bracket.
// Each sample i draws from its own generator seeded with {seed, i}, so
// results do not depend on the worker count.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spinrs/groupoid_poisson.hpp"

namespace spinrs {

struct CheckOptions {
  int n = 2;
  /// Empty optional means the full set of simple roots.
  std::optional<std::vector<int>> pi_prime;
  double kappa = 0.5;
  std::uint64_t seed = 12345;
  int samples = 1000;
  /// Deliberately corrupts each suite so that it must fail.
  bool negative_control = false;
  /// 0 means SPINRS_THREADS or the hardware concurrency.
  int threads = 0;
};

struct CheckResult {
  std::string name;
  double max_residual = 0.0;
  /// Median |value|, for checks that require a nonzero quantity.
  double median = 0.0;
  double tolerance = 0.0;
  /// false: max_residual must stay below tolerance; true: median must exceed it.
  bool lower_bound = false;
  int samples = 0;
  int resampled = 0;
  bool passed = false;
  std::string note;
};

const std::vector<std::string>& suite_names();

/// Runs one suite ("skew", "equivariance", "mdybe", "commute", "jacobi",
/// "theta") or "all". Throws ConfigError for unknown names.
std::vector<CheckResult> run_suite(const std::string& suite, const CheckOptions& options);

int worker_count(int requested);

/// Random samplers shared by the suites and the tests.
namespace sample {
std::mt19937_64 generator(std::uint64_t seed, std::uint64_t index);
/// Real zero-sum q with all root values at least `min_gap` away from 0.
CartanVector regular_q(std::mt19937_64& rng, int n, double spread = 2.0, double min_gap = 0.05);
/// Traceless matrix with entries uniform in the unit square.
Matrix algebra(std::mt19937_64& rng, int n);
/// exp of a random traceless matrix of the given scale.
GroupElement group(std::mt19937_64& rng, int n, double scale = 0.5);
/// Hermitian positive det-1 matrix exp(H), H traceless Hermitian.
GroupElement hermitian_group(std::mt19937_64& rng, int n, double scale = 0.5);
/// Diagonal det-1 matrix exp(diag(c)), c complex zero-sum.
GroupElement cartan_group(std::mt19937_64& rng, int n);
}  // namespace sample

}  // namespace spinrs
