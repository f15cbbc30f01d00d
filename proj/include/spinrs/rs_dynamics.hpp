#pragma once

// Hamilton equations of the spin Ruijsenaars-Schneider models restricted to
// the gauge group bundle (u = v = q), with the bracket rescaled by 1/2:
//
//   dq/dt = -1/2 Pi_h Df(g),
//   dg/dt =  1/2 (R(q) Df(g)) g - 1/2 g (R(q) Df(g)),
//
// for invariant f built from power traces and fundamental characters.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinrs/dynamical_rmatrix.hpp"
#include "spinrs/ode.hpp"

namespace spinrs {

struct RSState {
  CartanVector q;
  GroupElement g;
};

struct CharacterTerm {
  int index;  // 1..N
  Complex coeff;
};

/// f(g) = sum_k c_k tr(g^k) + sum_m d_m chi_m(g).
class HamiltonianSpec {
 public:
  HamiltonianSpec(PowerTracePoly power_traces, std::vector<CharacterTerm> characters = {});
  /// f = tr(g) = chi_1(g).
  static HamiltonianSpec trace();

  const PowerTracePoly& power_traces() const { return power_traces_; }
  const std::vector<CharacterTerm>& characters() const { return characters_; }

  Complex value(const Matrix& g) const;
  AlgebraElement gradient(const Matrix& g) const;
  HamiltonianSpec negated() const;

 private:
  PowerTracePoly power_traces_;
  std::vector<CharacterTerm> characters_;
};

struct IntegratorConfig {
  ode::Method method = ode::Method::RK45;
  double step = 1e-3;
  double rtol = 1e-9;
  double atol = 1e-12;
  long max_steps = 1'000'000;
  double wall_tol = tolerance::kWall;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RSState> states;
  /// tr(g^k), k = 1..N, per sample.
  std::vector<std::vector<Complex>> conserved;

  std::string solver;
  double rtol = 0.0;
  double atol = 0.0;
  long steps = 0;
  long rejected = 0;
  double max_projection_correction = 0.0;

  /// Set when the run stopped early (collision with a wall, eigenvalue
  /// collision in the factorization).
  std::optional<double> breakdown_time;
  std::string breakdown_reason;

  bool complete() const { return !breakdown_time.has_value(); }
  void push(double t, RSState s);
};

struct FieldValue {
  Vector dq;
  Matrix dg;
};

FieldValue eom_field(const RMatrixSpec& spec, const HamiltonianSpec& ham, const RSState& s);

struct ComponentwiseValue {
  Vector ddq;
  Matrix dg;
};

/// Literal componentwise form of the f = tr(g), pi' = pi equations: second
/// derivative of q and the entries of dg/dt. Used as an independent oracle.
ComponentwiseValue eom_componentwise(const RMatrixSpec& spec, const RSState& s);

/// Integrates the equations of motion over a strictly increasing grid. On a
/// wall collision the partial trajectory is returned with breakdown_time set.
Trajectory integrate(const RMatrixSpec& spec, const HamiltonianSpec& ham, const RSState& s0,
                     std::span<const double> t_grid, const IntegratorConfig& cfg);

std::vector<Complex> conserved_quantities(const Matrix& g);

struct ConservationReport {
  /// max_t |tr(g(t)^k) - tr(g0^k)| / max(1, |tr(g0^k)|), k = 1..N.
  std::vector<double> trace_drift;
  /// Largest displacement of a matched eigenvalue of g(t) from those of g0.
  double spectrum_drift = 0.0;
};

ConservationReport conserved_report(const Trajectory& traj);

/// Greedy nearest matching of two eigenvalue lists; returns the largest
/// matched distance.
double spectrum_distance(const Vector& a, const Vector& b);

}  // namespace spinrs
