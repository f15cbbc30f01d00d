#include <doctest.h>

#include <cmath>

#include "spinrs/checks.hpp"
#include "spinrs/errors.hpp"
#include "spinrs/groupoid_poisson.hpp"

using namespace spinrs;

namespace {

Vector zero_sum(std::mt19937_64& rng, int n) {
  Vector v = sample::algebra(rng, n).diagonal();
  v.array() -= v.mean();
  return v;
}

GroupoidPoint random_point(std::mt19937_64& rng, int n, bool gauge_bundle) {
  const auto u = sample::regular_q(rng, n);
  return {u, sample::group(rng, n), gauge_bundle ? u : sample::regular_q(rng, n)};
}

double gradient_gap(const ObservableGradients& a, const ObservableGradients& b) {
  return std::max({(a.d1 - b.d1).cwiseAbs().maxCoeff(), (a.d2 - b.d2).cwiseAbs().maxCoeff(),
                   (a.D - b.D).cwiseAbs().maxCoeff(), (a.Dprime - b.Dprime).cwiseAbs().maxCoeff()});
}

}  // namespace

TEST_SUITE("groupoid_poisson") {

TEST_CASE("analytic gradients agree with finite differences") {
  auto rng = sample::generator(21, 0);
  const int n = 2;
  const auto p = random_point(rng, n, false);
  const FiniteDifferenceOptions fd{1e-4, true};
  const std::vector<Observable> observables{
      Observable::pullback({{1, 1.0}, {2, Complex(0.3, 0.2)}}),
      Observable::linear_trace(sample::algebra(rng, n)),
      Observable::cartan_linear(zero_sum(rng, n), zero_sum(rng, n)),
      Observable::cartan_exponential(0.3 * zero_sum(rng, n), 0.3 * zero_sum(rng, n)),
      Observable::linear_trace(sample::algebra(rng, n)) * Observable::pullback({{2, 1.0}}),
  };
  for (const auto& obs : observables) {
    REQUIRE(obs.analytic_gradients());
    const auto exact = obs.gradients(p);
    const auto approx = finite_difference_gradients([&](const GroupoidPoint& x) { return obs(x); }, p, fd);
    CHECK(gradient_gap(exact, approx) < 1e-8);
  }
}

TEST_CASE("bracket is antisymmetric and satisfies the Leibniz rule") {
  auto rng = sample::generator(21, 1);
  const int n = 2;
  const RMatrixSpec spec(SimpleSubset::full(Dimension(n)), 0.5);
  const auto p = random_point(rng, n, false);
  const auto a = Observable::linear_trace(sample::algebra(rng, n));
  const auto b = Observable::cartan_exponential(0.4 * zero_sum(rng, n), 0.4 * zero_sum(rng, n));
  const auto c = Observable::pullback({{2, 1.0}});
  CHECK(std::abs(bracket_eval(spec, a, b, p) + bracket_eval(spec, b, a, p)) < 1e-13);
  const Complex lhs = bracket_eval(spec, a, b * c, p);
  const Complex rhs = bracket_eval(spec, a, b, p) * c(p) + b(p) * bracket_eval(spec, a, c, p);
  CHECK(std::abs(lhs - rhs) < 1e-12);
  CHECK(std::abs(bracket_eval(spec, a, b, p, 0.5) - 0.5 * bracket_eval(spec, a, b, p)) < 1e-15);
}

TEST_CASE("invariant functions: closed form of the bracket and commutation on the gauge bundle") {
  for (int n = 1; n <= 3; ++n) {
    const RMatrixSpec spec(SimpleSubset::full(Dimension(n)), 0.5);
    auto rng = sample::generator(21, 10 + static_cast<std::uint64_t>(n));
    for (int s = 0; s < 20; ++s) {
      const auto off = random_point(rng, n, false);
      const auto on = random_point(rng, n, true);
      for (int j = 1; j <= n; ++j) {
        for (int k = 1; k <= n; ++k) {
          const PowerTracePoly fj{{j, 1.0}}, fk{{k, 1.0}};
          const auto oj = Observable::pullback(fj), ok = Observable::pullback(fk);
          CHECK(std::abs(bracket_eval(spec, oj, ok, off) - invariant_pair_bracket(spec, fj, fk, off)) < 1e-12);
          CHECK(std::abs(bracket_eval(spec, oj, ok, on)) < 1e-10);
        }
      }
    }
  }
  // Off the bundle distinct power traces do not commute once n >= 2.
  const RMatrixSpec spec(SimpleSubset::full(Dimension(2)), 0.5);
  auto rng = sample::generator(21, 99);
  const auto p = random_point(rng, 2, false);
  CHECK(std::abs(invariant_pair_bracket(spec, {{1, 1.0}}, {{2, 1.0}}, p)) > 1e-4);
}

TEST_CASE("Jacobi identity with nested finite differences") {
  const RMatrixSpec spec(SimpleSubset::full(Dimension(2)), 0.5);
  auto rng = sample::generator(21, 3);
  const FiniteDifferenceOptions fd{1e-5, true};
  for (int s = 0; s < 5; ++s) {
    const auto p = random_point(rng, 2, false);
    const auto x = Observable::linear_trace(sample::algebra(rng, 2));
    const auto y = Observable::linear_trace(sample::algebra(rng, 2)) *
                   Observable::cartan_exponential(0.3 * zero_sum(rng, 2), 0.3 * zero_sum(rng, 2));
    const auto z = Observable::pullback({{2, 1.0}});
    const Complex cyc = bracket_eval(spec, bracket_observable(spec, x, y, 1.0, fd), z, p) +
                        bracket_eval(spec, bracket_observable(spec, y, z, 1.0, fd), x, p) +
                        bracket_eval(spec, bracket_observable(spec, z, x, 1.0, fd), y, p);
    CHECK(std::abs(cyc) < 1e-4);
  }
}

TEST_CASE("H-action preserves invariant observables and the momentum map") {
  auto rng = sample::generator(21, 4);
  const auto p = random_point(rng, 3, false);
  const auto h = sample::cartan_group(rng, 3);
  const auto hp = h_action(h, p);
  const auto f = Observable::pullback({{1, 1.0}, {3, 0.5}});
  CHECK(std::abs(f(hp) - f(p)) < 1e-12);
  CHECK((momentum_gamma(hp).vec() - momentum_gamma(p).vec()).isZero(0.0));
  CHECK((momentum_gamma(p).vec() - (p.u.vec() - p.v.vec())).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(h_action(sample::group(rng, 3), p), DimensionError);
}

TEST_CASE("groupoid multiplication and inverse") {
  auto rng = sample::generator(21, 5);
  const int n = 2;
  const auto u = sample::regular_q(rng, n), v = sample::regular_q(rng, n), w = sample::regular_q(rng, n);
  const GroupoidPoint p1{u, sample::group(rng, n), v}, p2{v, sample::group(rng, n), w};
  const auto prod = groupoid_multiply(p1, p2);
  CHECK((prod.g.mat() - p1.g.mat() * p2.g.mat()).norm() < 1e-13);
  CHECK((prod.u.vec() - u.vec()).isZero(0.0));
  CHECK((prod.v.vec() - w.vec()).isZero(0.0));
  const auto unit = groupoid_multiply(p1, groupoid_inverse(p1));
  CHECK((unit.g.mat() - Matrix::Identity(3, 3)).norm() < 1e-13);
  CHECK(unit.on_gauge_bundle());
  CHECK_THROWS_AS(groupoid_multiply(p1, p1), ComposabilityError);
}

}  // TEST_SUITE
