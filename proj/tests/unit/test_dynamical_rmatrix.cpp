#include <doctest.h>

#include <cmath>

#include "spinrs/checks.hpp"
#include "spinrs/dynamical_rmatrix.hpp"
#include "spinrs/errors.hpp"

using namespace spinrs;

namespace {

CartanVector q_of(std::initializer_list<double> v) {
  Vector q(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) q(i++) = x;
  return CartanVector::from(q);
}

Matrix unit(int size, int i, int j) {
  Matrix e = Matrix::Zero(size, size);
  e(i, j) = 1.0;
  return e;
}

}  // namespace

TEST_SUITE("dynamical_rmatrix") {

TEST_CASE("coth coefficient on the span, +-1/2 outside") {
  const RMatrixSpec full(SimpleSubset::full(Dimension(1)), 0.5);
  const auto q = q_of({1.0, -1.0});
  // alpha(q) = 2, 1/2 coth(1) = 0.65651764...
  const double expected = 0.5 / std::tanh(1.0);
  CHECK(std::abs(phi_alpha(full, q, {0, 1}) - expected) < 1e-15);
  CHECK(std::abs(expected - 0.6565176427) < 1e-10);
  CHECK(std::abs(phi_alpha(full, q, {1, 0}) + expected) < 1e-15);
  const Matrix r = apply_R(full, q, unit(2, 0, 1));
  CHECK(std::abs(r(0, 1) + expected) < 1e-15);

  const RMatrixSpec empty(SimpleSubset::empty(Dimension(2)), 0.5);
  const auto q3 = q_of({0.3, 0.1, -0.4});
  CHECK(phi_alpha(empty, q3, {0, 2}) == Complex(0.5));
  CHECK(phi_alpha(empty, q3, {2, 0}) == Complex(-0.5));
  // Diagonal entries are annihilated.
  CHECK(apply_R(empty, q3, Matrix(unit(3, 1, 1) - unit(3, 2, 2))).isZero(0.0));
}

TEST_CASE("evaluation on a wall names the root") {
  const RMatrixSpec spec(SimpleSubset::full(Dimension(2)), 0.5);
  const auto q = q_of({0.5, 0.5, -1.0});
  try {
    apply_R(spec, q, unit(3, 0, 1));
    FAIL("expected a singularity");
  } catch (const SingularityError& e) {
    CHECK(((e.root_i == 0 && e.root_j == 1) || (e.root_i == 1 && e.root_j == 0)));
  }
  // Same point is regular when the colliding root is outside the span.
  const RMatrixSpec partial(SimpleSubset(Dimension(2), {2}), 0.5);
  CHECK_NOTHROW(apply_R(partial, q, unit(3, 0, 1)));
}

TEST_CASE("R-plus-minus differ from R by +-kappa") {
  const RMatrixSpec spec(SimpleSubset::full(Dimension(2)), 0.5);
  auto rng = sample::generator(11, 0);
  const auto q = sample::regular_q(rng, 2);
  const Matrix a = sample::algebra(rng, 2);
  CHECK((apply_Rpm(spec, q, a, Sign::Plus) - apply_R(spec, q, a) - 0.5 * a).norm() < 1e-15);
  CHECK((apply_Rpm(spec, q, a, Sign::Minus) - apply_R(spec, q, a) + 0.5 * a).norm() < 1e-15);
}

TEST_CASE("skew symmetry, equivariance, mDYBE and theta identities on random samples") {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& subset : SimpleSubset::all(Dimension(n))) {
      const RMatrixSpec spec(subset, 0.5);
      auto rng = sample::generator(11, static_cast<std::uint64_t>(n));
      for (int s = 0; s < 30; ++s) {
        const auto q = sample::regular_q(rng, n);
        const Matrix a = sample::algebra(rng, n), b = sample::algebra(rng, n);
        CHECK(std::abs(skew_defect(spec, q, a, b)) < 1e-12);
        CHECK(equivariance_defect(spec, q, sample::cartan_group(rng, n), a).norm() < 1e-12);
        CHECK(mdybe_residual(spec, q, a, b).norm() < 1e-10);
        if (subset.is_full()) CHECK(theta_defect(spec, q, a).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("negative controls break the identities") {
  const RMatrixSpec spec(SimpleSubset::full(Dimension(2)), 0.5);
  auto rng = sample::generator(11, 99);
  const auto q = sample::regular_q(rng, 2);
  const Matrix a = sample::algebra(rng, 2), b = sample::algebra(rng, 2);
  CHECK(mdybe_residual(spec.with_kappa(1.0), q, a, b).norm() > 1e-3);
  CHECK(theta_defect(spec.with_kappa(1.0), q, a).norm() > 1e-3);
  const Complex plus = trace_pairing(apply_Rpm(spec, q, a, Sign::Plus), b) +
                       trace_pairing(a, apply_Rpm(spec, q, b, Sign::Plus));
  CHECK(std::abs(plus) > 1e-3);
  CHECK_THROWS_AS(equivariance_defect(spec, q, sample::group(rng, 2), a), DimensionError);
}

TEST_CASE("q-derivative of R matches finite differences") {
  for (const auto& subset : SimpleSubset::all(Dimension(2))) {
    const RMatrixSpec spec(subset, 0.5);
    auto rng = sample::generator(11, 7);
    const auto q = sample::regular_q(rng, 2, 2.0, 0.3);
    const Matrix a = sample::algebra(rng, 2), b = sample::algebra(rng, 2);
    Vector dirv = sample::algebra(rng, 2).diagonal();
    dirv.array() -= dirv.mean();
    const auto dir = CartanVector::from(dirv.real().cast<Complex>());
    const double h = 1e-5;
    const auto qp = CartanVector::from(q.vec() + h * dir.vec());
    const auto qm = CartanVector::from(q.vec() - h * dir.vec());
    const Matrix fd = (apply_R(spec, qp, a) - apply_R(spec, qm, a)) / (2.0 * h);
    CHECK((dR_directional(spec, q, dir, a) - fd).norm() < 1e-8);

    // grad_q <R(q) A, B> paired with dir.
    const Complex fd_pair =
        (trace_pairing(apply_R(spec, qp, a), b) - trace_pairing(apply_R(spec, qm, a), b)) / (2.0 * h);
    const Vector grad = grad_pairing_term(spec, q, a, b).vec();
    CHECK(std::abs(grad.cwiseProduct(dir.vec()).sum() - fd_pair) < 1e-8);
  }
}

}  // TEST_SUITE
