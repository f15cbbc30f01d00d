#pragma once

// Coboundary dynamical Poisson bracket on the trivial groupoid U x G x U,
// the diagonal H-action, the momentum map u - v and the groupoid structure.

#include <functional>
#include <memory>

#include "spinrs/dynamical_rmatrix.hpp"

namespace spinrs {

struct GroupoidPoint {
  CartanVector u;
  GroupElement g;
  CartanVector v;

  bool on_gauge_bundle(double tol = 1e-10) const {
    return (u.vec() - v.vec()).cwiseAbs().maxCoeff() < tol;
  }
};

/// delta_1, delta_2 in h (zero-sum vectors) and the left/right gradients
/// D, D' in g (traceless), all with respect to the trace pairing.
struct ObservableGradients {
  Vector d1;
  Vector d2;
  Matrix D;
  Matrix Dprime;
  bool approximate = false;
};

struct FiniteDifferenceOptions {
  double step = 1e-6;
  /// Combine steps h and h/2 to cancel the O(h^2) term.
  bool richardson = false;
};

/// A smooth function on the groupoid with optional analytic gradients.
/// Without analytic gradients, central differences are used.
class Observable {
 public:
  using EvalFn = std::function<Complex(const GroupoidPoint&)>;
  using GradFn = std::function<ObservableGradients(const GroupoidPoint&)>;

  explicit Observable(EvalFn eval, GradFn grad = {}, FiniteDifferenceOptions fd = {});

  Complex operator()(const GroupoidPoint& p) const { return eval_(p); }
  bool analytic_gradients() const { return static_cast<bool>(grad_); }
  ObservableGradients gradients(const GroupoidPoint& p) const;

  /// Pr_2^* f for f = sum c_k tr(g^k).
  static Observable pullback(PowerTracePoly poly);
  /// tr(P g).
  static Observable linear_trace(Matrix p);
  /// <a, u> + <b, v>.
  static Observable cartan_linear(Vector a, Vector b);
  /// exp(<a, u> - <b, v>); a nonlinear function of the base points.
  static Observable cartan_exponential(Vector a, Vector b);

  friend Observable operator*(const Observable& x, const Observable& y);
  friend Observable operator+(const Observable& x, const Observable& y);
  Observable scaled(Complex c) const;

 private:
  EvalFn eval_;
  GradFn grad_;
  FiniteDifferenceOptions fd_;
};

/// Central-difference gradients of an arbitrary function on the groupoid.
ObservableGradients finite_difference_gradients(const Observable::EvalFn& f,
                                                const GroupoidPoint& p,
                                                FiniteDifferenceOptions fd);

/// {phi, psi}_R(p) term by term, multiplied by `rescale` (1 or 1/2).
Complex bracket_eval(const RMatrixSpec& spec, const Observable& phi, const Observable& psi,
                     const GroupoidPoint& p, double rescale = 1.0);

/// {phi, psi} as a new observable (finite-difference gradients).
Observable bracket_observable(const RMatrixSpec& spec, Observable phi, Observable psi,
                              double rescale, FiniteDifferenceOptions fd);

/// <(R(v) - R(u)) Df1(g), Df2(g)> for invariant power-trace polynomials.
Complex invariant_pair_bracket(const RMatrixSpec& spec, const PowerTracePoly& f1,
                               const PowerTracePoly& f2, const GroupoidPoint& p);

/// h.(u, g, v) = (u, h g h^{-1}, v) for diagonal h.
GroupoidPoint h_action(const GroupElement& h, const GroupoidPoint& p);

/// gamma = alpha - beta = u - v.
CartanVector momentum_gamma(const GroupoidPoint& p);

GroupoidPoint groupoid_multiply(const GroupoidPoint& p1, const GroupoidPoint& p2,
                                double tol = 1e-10);
GroupoidPoint groupoid_inverse(const GroupoidPoint& p);

}  // namespace spinrs
