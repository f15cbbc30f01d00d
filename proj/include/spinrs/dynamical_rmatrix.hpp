#pragma once

// The hyperbolic dynamical r-matrix on sl(N+1):
//
//   (R(q)X)_ij = -phi_ij(q) X_ij  (i != j),   diagonal killed,
//   phi_ij = +1/2 or -1/2 outside the root span of pi' (by sign of the root),
//   phi_ij = 1/2 coth((q_i - q_j)/2) inside it,
//
// together with R^{+-} = R +- kappa*id and the residual checkers for
// skew-symmetry, H-equivariance and the modified dynamical Yang-Baxter
// equation with right-hand side -[K A, K B].

#include "spinrs/lie_typea.hpp"

namespace spinrs {

class RMatrixSpec {
 public:
  RMatrixSpec(SimpleSubset subset, double kappa, double wall_tol = tolerance::kWall);

  Dimension dim() const { return subset_.dim(); }
  const SimpleSubset& subset() const { return subset_; }
  double kappa() const { return kappa_; }
  double wall_tol() const { return wall_tol_; }
  RMatrixSpec with_kappa(double kappa) const { return {subset_, kappa, wall_tol_}; }

 private:
  SimpleSubset subset_;
  double kappa_;
  double wall_tol_;
};

enum class Sign { Plus, Minus };

Complex phi_alpha(const RMatrixSpec& spec, const CartanVector& q, Root alpha);

/// Matrix of phi_ij(q) (zero diagonal). Throws SingularityError at a wall.
Matrix phi_matrix(const RMatrixSpec& spec, const CartanVector& q);

Matrix apply_R(const RMatrixSpec& spec, const CartanVector& q, const Matrix& x);
Matrix apply_Rpm(const RMatrixSpec& spec, const CartanVector& q, const Matrix& x, Sign sign);

/// d/ds R(q + s*dir) A at s = 0.
Matrix dR_directional(const RMatrixSpec& spec, const CartanVector& q,
                      const CartanVector& dir, const Matrix& a);

/// Gradient in h of q -> tr(R(q)A B).
CartanVector grad_pairing_term(const RMatrixSpec& spec, const CartanVector& q,
                               const Matrix& a, const Matrix& b);

/// Left-hand side minus right-hand side of the mDYBE at (q, A, B), using
/// ad* = -ad and iota* = Pi_h.
Matrix mdybe_residual(const RMatrixSpec& spec, const CartanVector& q,
                      const Matrix& a, const Matrix& b);

/// R(q)(Ad_h A) - Ad_h(R(q) A) for diagonal h (Ad*_{h^-1} q = q).
Matrix equivariance_defect(const RMatrixSpec& spec, const CartanVector& q,
                           const GroupElement& h, const Matrix& a);

/// tr(R(q)A B) + tr(A R(q)B).
Complex skew_defect(const RMatrixSpec& spec, const CartanVector& q,
                    const Matrix& a, const Matrix& b);

/// R^-(q)A - (Ad_{e^q} R^+(q)A - Pi_h A); vanishes for pi' = pi, kappa = 1/2.
Matrix theta_defect(const RMatrixSpec& spec, const CartanVector& q, const Matrix& a);

}  // namespace spinrs
