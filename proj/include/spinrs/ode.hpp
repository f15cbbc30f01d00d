#pragma once

// Explicit Runge-Kutta integration of y' = f(t, y) for complex state vectors:
// classic RK4 with a fixed step and Dormand-Prince 5(4) with adaptive step
// control. Output is produced exactly at the requested sample times.

#include <functional>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace spinrs::ode {

using State = Eigen::VectorXcd;
using Rhs = std::function<State(double, const State&)>;
/// Projects the state back onto its constraint set after an accepted step and
/// returns the size of the correction.
using Projection = std::function<double(State&)>;
using SampleFn = std::function<void(double, const State&)>;

enum class Method { RK4, RK45 };

struct Options {
  Method method = Method::RK45;
  double step = 1e-3;  // RK4 only
  double rtol = 1e-9;
  double atol = 1e-12;
  long max_steps = 1'000'000;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double max_correction = 0.0;
  /// Time reached by the last accepted step.
  double t = 0.0;
};

/// Integrates from grid[0] through the strictly increasing `grid`, calling
/// `sample` at every grid time (including grid[0]). Exceptions thrown by the
/// right-hand side propagate after `stats.t` has been updated.
void integrate(const Rhs& rhs, State y0, std::span<const double> grid, const Options& options,
               const Projection& project, const SampleFn& sample, Stats& stats);

}  // namespace spinrs::ode
