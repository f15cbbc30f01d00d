#pragma once

// Exact solution of the spin RS flow (pi' = pi) by factorization:
//
//   M(t) = exp(-t kappa Df(g0)) e^{u0} = k+(t) e^{u(t)} k+(t)^{-1},
//   q(t) = u(t),  g(t) = k+(t)^{-1} g0 k+(t),
//
// where M(t) = x+(t) d(t) x+(t)^{-1} is tracked continuously, u = log d, and
// k+ = x+ exp(kappa (u - u0) - int_0^t Pi_h(x+^{-1} dx+/dt)) fixes the
// diagonal gauge freedom of x+.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinrs/rs_dynamics.hpp"

namespace spinrs {

/// Per-column scaling convention of the eigenvector matrix before it is
/// rescaled into SL(N+1). Both are smooth in t, so x+^{-1} dx+/dt exists.
enum class ColumnNormalization {
  UnitDiagonal,  // (x+)_ii = 1: unit overlap with the initial frame x+(0) = I
  UnitNorm,      // unit 2-norm columns with (x+)_ii real positive
};

enum class GaugeBackend {
  /// Pointwise eigendecomposition with nearest-log matching, plus the
  /// quadrature of the diagonal left log-derivative.
  Matched,
  /// Integrates the eigenframe along t in the gauge diag(x+^{-1} dx+/dt) = 0,
  /// so the gauge integral vanishes identically.
  Transport,
};

enum class DerivativeSource {
  /// x+^{-1} dx+/dt from the eigenvector perturbation identity and dM/dt.
  Analytic,
  /// 5-point differences of x+ on the grid.
  FiniteDifference,
};

using MatrixPath = std::function<Matrix(double)>;

struct MatchRecord {
  double time;
  /// Column j of this sample continues column permutation[j] of the
  /// eigensolver output.
  std::vector<int> permutation;
  /// Extra intermediate decompositions used to bridge from the previous sample.
  int substeps = 0;
  /// Scalar c with x+ = c * (normalized frame), det x+ = 1.
  Complex det_root;
};

struct EigenPath {
  std::vector<double> times;
  std::vector<Matrix> x_plus;  // det 1
  std::vector<Vector> d;       // eigenvalues, column-aligned with x_plus
  /// Pi_h(x+^{-1} dx+/dt) per sample; empty unless dM/dt was supplied.
  std::vector<Vector> log_derivative;
  std::vector<MatchRecord> match_log;
  double max_reconstruction_error = 0.0;
  std::optional<double> breakdown_time;
};

struct EigenPathOptions {
  ColumnNormalization normalization = ColumnNormalization::UnitDiagonal;
  /// Relative eigenvalue gap below which the path breaks down.
  double gap_tol = 1e-8;
  int max_bisections = 16;
  /// Orders the columns so that d at `anchor_index` matches `anchor`.
  std::optional<Vector> anchor;
  std::size_t anchor_index = 0;
};

/// exp(-t kappa Df(g0)) exp(q0).
Matrix build_M(const HamiltonianSpec& ham, const RSState& s0, double kappa, double t);

/// Continuous eigendecomposition of M along a monotone grid (increasing or
/// decreasing). With `m_dot`, also records the analytic log-derivative.
EigenPath eigen_path(const MatrixPath& m, std::span<const double> grid,
                     const EigenPathOptions& options = {}, const MatrixPath& m_dot = {});

struct GaugeOptions {
  DerivativeSource derivative = DerivativeSource::Analytic;
  /// Dropping the integral is only useful as a negative control.
  bool include_integral = true;
};

struct GaugeResult {
  std::vector<Matrix> k_plus;
  std::vector<CartanVector> u;
  /// int_0^t Pi_h(x+^{-1} dx+/dt) per sample.
  std::vector<Vector> integral;
  /// Richardson estimate of the quadrature error (infinite below 9 nodes).
  double quadrature_error = 0.0;
};

/// Builds k+ from an eigen path anchored at u0 (path.times[0] is t = 0).
GaugeResult gauge_correct(const EigenPath& path, const CartanVector& u0, double kappa,
                          const GaugeOptions& options = {});

struct SolveOptions {
  GaugeBackend backend = GaugeBackend::Matched;
  ColumnNormalization normalization = ColumnNormalization::UnitDiagonal;
  DerivativeSource derivative = DerivativeSource::Analytic;
  bool include_gauge_integral = true;
  double gap_tol = 1e-8;
  /// Matched backend: target for the Richardson quadrature estimate; the
  /// internal grid is refined until it is met.
  double quadrature_tol = 1e-10;
  int max_refinement = 64;
  /// Transport backend integrator tolerances.
  double transport_rtol = 1e-12;
  double transport_atol = 1e-14;
};

struct FactorizationResult {
  Trajectory traj;
  std::vector<Matrix> k_plus;
  std::vector<CartanVector> u_path;
  std::vector<Matrix> x_plus;  // matched backend only
  std::optional<double> breakdown_time;
  std::string backend;
  int refinement = 1;
  /// Eigendecompositions (matched) or accepted integrator steps (transport).
  long work = 0;
  double quadrature_error = 0.0;
  double max_reconstruction_error = 0.0;
  SolveOptions options;
};

/// Requires spec.subset() full. t_grid[0] is the initial time.
FactorizationResult solve(const RMatrixSpec& spec, const HamiltonianSpec& ham, const RSState& s0,
                          std::span<const double> t_grid, const SolveOptions& options = {});

struct FactorizationResiduals {
  /// max_t |exp(-t kappa Df(g0)) e^{u0} - k+ e^{u} k+^{-1}|_F
  double factorization = 0.0;
  /// max_t |k+ k-^{-1} - exp(-t kappa Df(g0))|_F with k- = e^{u0} k+ e^{-u}
  double theta = 0.0;
  /// max_t |Pi_h(k+^{-1} dk+/dt) - kappa du/dt|, from 5-point differences.
  /// The run is repeated on grids refined by 2, 4, ... 64 while the estimate
  /// keeps dropping by at least 4 per halving (difference truncation error);
  /// each repeat also contributes its k+ deviation at the original samples.
  double gauge_condition = 0.0;
  /// Grid refinement factor behind the reported gauge_condition.
  int gauge_refinement = 1;
  /// max_t |k+(t)^{-1} g0 k+(t) - g(t)|_F
  double conjugation = 0.0;
};

FactorizationResiduals factorization_residual(const FactorizationResult& result,
                                              const HamiltonianSpec& ham, const RSState& s0,
                                              double kappa);

}  // namespace spinrs
