#include "spinrs/dynamical_rmatrix.hpp"

#include <cmath>
#include <numbers>

#include "spinrs/errors.hpp"

namespace spinrs {

namespace {

void check_sizes(const RMatrixSpec& spec, const CartanVector& q) {
  if (q.size() != spec.dim().size()) throw DimensionError("r-matrix: Cartan vector size mismatch");
}

void check_sizes(const RMatrixSpec& spec, const Matrix& x) {
  const auto size = spec.dim().size();
  if (x.rows() != size || x.cols() != size) throw DimensionError("r-matrix: matrix size mismatch");
}

double pole_distance(Complex a) {
  const double period = 2.0 * std::numbers::pi;
  const double k = std::round(a.imag() / period);
  return std::abs(a - Complex(0.0, k * period));
}

Complex guarded_root_value(const RMatrixSpec& spec, const CartanVector& q, Root r) {
  const Complex a = q.root_value(r);
  const double dist = pole_distance(a);
  if (dist <= spec.wall_tol()) throw SingularityError(r.i, r.j, dist);
  return a;
}

Complex coth(Complex x) { return 1.0 / std::tanh(x); }

Complex csch_sq(Complex x) {
  const Complex s = std::sinh(x);
  return 1.0 / (s * s);
}

}  // namespace

RMatrixSpec::RMatrixSpec(SimpleSubset subset, double kappa, double wall_tol)
    : subset_(std::move(subset)), kappa_(kappa), wall_tol_(wall_tol) {
  if (kappa == 0.0) throw DimensionError("RMatrixSpec: kappa must be nonzero");
  if (!(wall_tol > 0.0)) throw DimensionError("RMatrixSpec: wall_tol must be positive");
}

Complex phi_alpha(const RMatrixSpec& spec, const CartanVector& q, Root alpha) {
  check_sizes(spec, q);
  const int size = spec.dim().size();
  if (alpha.i == alpha.j || alpha.i < 0 || alpha.j < 0 || alpha.i >= size || alpha.j >= size) {
    throw DimensionError("phi_alpha: invalid root");
  }
  if (!spec.subset().in_span(alpha)) return alpha.positive() ? 0.5 : -0.5;
  return 0.5 * coth(0.5 * guarded_root_value(spec, q, alpha));
}

Matrix phi_matrix(const RMatrixSpec& spec, const CartanVector& q) {
  check_sizes(spec, q);
  const int size = spec.dim().size();
  Matrix phi = Matrix::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = i + 1; j < size; ++j) {
      const Complex v = phi_alpha(spec, q, {i, j});
      phi(i, j) = v;
      phi(j, i) = -v;  // odd in the root
    }
  }
  return phi;
}

Matrix apply_R(const RMatrixSpec& spec, const CartanVector& q, const Matrix& x) {
  check_sizes(spec, x);
  return -(phi_matrix(spec, q).array() * x.array()).matrix();
}

Matrix apply_Rpm(const RMatrixSpec& spec, const CartanVector& q, const Matrix& x, Sign sign) {
  const double k = sign == Sign::Plus ? spec.kappa() : -spec.kappa();
  return apply_R(spec, q, x) + k * x;
}

Matrix dR_directional(const RMatrixSpec& spec, const CartanVector& q,
                      const CartanVector& dir, const Matrix& a) {
  check_sizes(spec, q);
  check_sizes(spec, dir);
  check_sizes(spec, a);
  const int size = spec.dim().size();
  Matrix out = Matrix::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (i == j || !spec.subset().in_span({i, j})) continue;
      const Complex x = guarded_root_value(spec, q, {i, j});
      // d/ds [-1/2 coth(x/2)] = 1/4 csch^2(x/2) dx/ds
      out(i, j) = 0.25 * csch_sq(0.5 * x) * (dir[i] - dir[j]) * a(i, j);
    }
  }
  return out;
}

CartanVector grad_pairing_term(const RMatrixSpec& spec, const CartanVector& q,
                               const Matrix& a, const Matrix& b) {
  check_sizes(spec, q);
  check_sizes(spec, a);
  check_sizes(spec, b);
  const int size = spec.dim().size();
  // tr(R(q)A B) = sum_{i != j} -phi_ij A_ij B_ji
  Vector grad = Vector::Zero(size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (i == j || !spec.subset().in_span({i, j})) continue;
      const Complex x = guarded_root_value(spec, q, {i, j});
      const Complex w = 0.25 * csch_sq(0.5 * x) * a(i, j) * b(j, i);
      grad(i) += w;
      grad(j) -= w;
    }
  }
  return CartanVector::from(grad);
}

Matrix mdybe_residual(const RMatrixSpec& spec, const CartanVector& q,
                      const Matrix& a, const Matrix& b) {
  const Matrix ra = apply_R(spec, q, a);
  const Matrix rb = apply_R(spec, q, b);
  // ad*_X Y ~ -[X, Y]
  const Matrix coad = -commutator(ra, b) + commutator(rb, a);
  const CartanVector pa = proj_cartan(a);
  const CartanVector pb = proj_cartan(b);
  const double k = spec.kappa();
  Matrix lhs = commutator(ra, rb) + apply_R(spec, q, coad) + dR_directional(spec, q, pa, b) -
               dR_directional(spec, q, pb, a) + grad_pairing_term(spec, q, a, b).as_matrix();
  const Matrix rhs = -commutator(k * a, k * b);
  return lhs - rhs;
}

Matrix equivariance_defect(const RMatrixSpec& spec, const CartanVector& q,
                           const GroupElement& h, const Matrix& a) {
  const Matrix& hm = h.mat();
  if (!hm.isDiagonal(0.0)) throw DimensionError("equivariance_defect: h must be diagonal");
  return apply_R(spec, q, adjoint_action(hm, a)) - adjoint_action(hm, apply_R(spec, q, a));
}

Complex skew_defect(const RMatrixSpec& spec, const CartanVector& q,
                    const Matrix& a, const Matrix& b) {
  return trace_pairing(apply_R(spec, q, a), b) + trace_pairing(a, apply_R(spec, q, b));
}

Matrix theta_defect(const RMatrixSpec& spec, const CartanVector& q, const Matrix& a) {
  const Matrix eq = q.vec().array().exp().matrix().asDiagonal();
  const Matrix plus = apply_Rpm(spec, q, a, Sign::Plus);
  const Matrix minus = apply_Rpm(spec, q, a, Sign::Minus);
  return minus - (adjoint_action(eq, plus) - proj_cartan(a).as_matrix());
}

}  // namespace spinrs
