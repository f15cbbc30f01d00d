#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "spinrs/checks.hpp"
#include "spinrs/errors.hpp"
#include "spinrs/factorization_solver.hpp"

using namespace spinrs;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] = a + (b - a) * k / (n - 1);
  t.back() = b;
  return t;
}

RSState diagonal_state() {
  Vector q(2);
  q << 1.0, -1.0;
  Matrix g(2, 2);
  g << 2.0, 0.0, 0.0, 0.5;
  return {CartanVector::from(q), GroupElement::from(g)};
}

RSState hermitian_n1() {
  Vector q(2);
  q << 1.0, -1.0;
  const double a = std::sqrt(1.01);
  Matrix g(2, 2);
  g << a, 0.1, 0.1, a;
  return {CartanVector::from(q), GroupElement::from(g)};
}

RSState random_hermitian_state(std::mt19937_64& rng, int n, double off = 0.2) {
  Matrix h = sample::hermitian_group(rng, n, 0.6).mat();
  const Matrix d = h.diagonal().asDiagonal();
  const double m = (h - d).cwiseAbs().maxCoeff();
  if (m > off) h = d + (off / m) * (h - d);
  h /= std::pow(h.determinant().real(), 1.0 / (n + 1));
  return {sample::regular_q(rng, n, 1.5, 0.3), GroupElement::from(h)};
}

double state_distance(const RSState& a, const RSState& b) {
  return (a.q.vec() - b.q.vec()).cwiseAbs().maxCoeff() + (a.g.mat() - b.g.mat()).norm();
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  REQUIRE(a.states.size() == b.states.size());
  double d = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) d = std::max(d, state_distance(a.states[k], b.states[k]));
  return d;
}

Vector sorted_eigenvalues(const Matrix& g) {
  Vector ev = Eigen::ComplexEigenSolver<Matrix>(g, false).eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), [](Complex x, Complex y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return ev;
}

const RMatrixSpec& spec_n(int n) {
  static std::vector<RMatrixSpec> specs{RMatrixSpec(SimpleSubset::full(Dimension(1)), 0.5),
                                        RMatrixSpec(SimpleSubset::full(Dimension(2)), 0.5),
                                        RMatrixSpec(SimpleSubset::full(Dimension(3)), 0.5)};
  return specs[static_cast<std::size_t>(n - 1)];
}

}  // namespace

TEST_SUITE("factorization_solver") {

TEST_CASE("M(t) at t = 0, diagonal case and its derivative") {
  const auto s0 = hermitian_n1();
  const auto ham = HamiltonianSpec::trace();
  const Matrix eu = s0.q.vec().array().exp().matrix().asDiagonal();
  CHECK((build_M(ham, s0, 0.5, 0.0) - eu).norm() == 0.0);

  const auto sd = diagonal_state();
  const Matrix md = build_M(ham, sd, 0.5, 0.8);
  CHECK(std::abs(md(0, 1)) == 0.0);
  CHECK(std::abs(md(0, 0) - std::exp(1.0 - 0.8 * 0.5 * 0.75)) < 1e-14);

  const double h = 1e-5;
  const Matrix fd = (build_M(ham, s0, 0.5, h) - build_M(ham, s0, 0.5, -h)) / (2.0 * h);
  const Matrix exact = -0.5 * ham.gradient(s0.g.mat()).mat() * eu;
  CHECK((fd - exact).norm() < 1e-7);
}

TEST_CASE("eigen path of a constant diagonal family is trivial") {
  Matrix d(3, 3);
  d.setZero();
  d.diagonal() << 2.0, 1.0, 0.5;
  const auto grid = linspace(0.0, 1.0, 5);
  const auto path = eigen_path([&](double) { return d; }, grid);
  REQUIRE(path.x_plus.size() == grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(path.x_plus[k].isIdentity(0.0));
    CHECK((path.d[k] - d.diagonal()).isZero(0.0));
  }
}

TEST_CASE("eigen path of a rotation-conjugated 2x2 family") {
  const double a = 0.4;
  auto rot = [](double th) {
    Matrix r(2, 2);
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return r;
  };
  Matrix diag(2, 2);
  diag << std::exp(a), 0.0, 0.0, std::exp(-a);
  const MatrixPath m = [&](double t) { return Matrix(rot(t) * diag * rot(t).transpose()); };
  const auto grid = linspace(0.0, 1.2, 61);
  EigenPathOptions opts;
  opts.anchor = diag.diagonal();
  const auto path = eigen_path(m, grid, opts);
  REQUIRE(path.x_plus.size() == grid.size());
  CHECK(path.max_reconstruction_error < 1e-12);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Eigenvalues keep their order; columns stay parallel to the rotated axes.
    CHECK(std::abs(path.d[k](0) - std::exp(a)) < 1e-12);
    CHECK(std::abs(path.d[k](1) - std::exp(-a)) < 1e-12);
    const double t = grid[k];
    const Matrix& x = path.x_plus[k];
    CHECK(std::abs(x(1, 0) / x(0, 0) - std::tan(t)) < 1e-10);
    CHECK(std::abs(x(0, 1) / x(1, 1) + std::tan(t)) < 1e-10);
    CHECK(std::abs(x.determinant() - 1.0) < 1e-12);
  }
  CHECK(path.x_plus.front().isIdentity(1e-14));
}

TEST_CASE("fast frame rotation is bridged by bisection") {
  // The frame turns by 0.8 rad per output step, past the pi/4 point where
  // first-order eigenvalue predictions swap.
  const double a = 0.3;
  const MatrixPath m = [&](double t) {
    Matrix r(2, 2);
    r << std::cos(4.0 * t), -std::sin(4.0 * t), std::sin(4.0 * t), std::cos(4.0 * t);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = std::exp(a);
    d(1, 1) = std::exp(-a);
    return Matrix(r * d * r.transpose());
  };
  const auto grid = linspace(0.0, 2.0, 11);
  const auto path = eigen_path(m, grid);
  REQUIRE(path.d.size() == grid.size());
  int substeps = 0;
  for (const auto& rec : path.match_log) substeps += rec.substeps;
  CHECK(substeps > 0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(path.d[k](0) - std::exp(a)) < 1e-12);
  }
}

TEST_CASE("eigenvalue collision is reported as a breakdown") {
  const MatrixPath m = [](double t) {
    Matrix x(2, 2);
    x << std::exp(t), 0.0, 0.0, std::exp(-t);
    return x;
  };
  const auto grid = linspace(-1.0, 1.0, 5);
  const auto path = eigen_path(m, grid);
  REQUIRE(path.breakdown_time.has_value());
  CHECK(*path.breakdown_time == 0.0);
  CHECK(path.x_plus.size() == 2);
}

TEST_CASE("reversed grid gives the same reconstruction") {
  const auto s0 = hermitian_n1();
  const auto ham = HamiltonianSpec::trace();
  const MatrixPath m = [&](double t) { return build_M(ham, s0, 0.5, t); };
  const Matrix df = ham.gradient(s0.g.mat()).mat();
  const MatrixPath mdot = [&](double t) { return Matrix(-0.5 * df * m(t)); };
  const auto grid = linspace(0.0, 1.0, 101);
  std::vector<double> rev(grid.rbegin(), grid.rend());
  EigenPathOptions fo, ro;
  fo.anchor = ro.anchor = s0.q.vec().array().exp().matrix();
  ro.anchor_index = rev.size() - 1;
  const auto fwd = eigen_path(m, grid, fo, mdot);
  auto back = eigen_path(m, rev, ro, mdot);
  // Put the reversed run back in increasing time and rebuild g.
  std::reverse(back.times.begin(), back.times.end());
  std::reverse(back.x_plus.begin(), back.x_plus.end());
  std::reverse(back.d.begin(), back.d.end());
  std::reverse(back.log_derivative.begin(), back.log_derivative.end());
  const auto kf = gauge_correct(fwd, s0.q, 0.5);
  const auto kb = gauge_correct(back, s0.q, 0.5);
  const Matrix& g0 = s0.g.mat();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix gf = kf.k_plus[k].inverse() * g0 * kf.k_plus[k];
    const Matrix gb = kb.k_plus[k].inverse() * g0 * kb.k_plus[k];
    CHECK((gf - gb).norm() < 1e-9);
  }
}

TEST_CASE("trivial frame: k+ = exp(kappa (u - u0))") {
  const auto s0 = diagonal_state();
  const auto ham = HamiltonianSpec::trace();
  const auto grid = linspace(0.0, 1.0, 21);
  const auto path = eigen_path([&](double t) { return build_M(ham, s0, 0.5, t); }, grid);
  const auto gauge = gauge_correct(path, s0.q, 0.5, {DerivativeSource::FiniteDifference, true});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vector expo = 0.5 * (gauge.u[k].vec() - s0.q.vec());
    CHECK((gauge.k_plus[k] - Matrix(expo.array().exp().matrix().asDiagonal())).norm() < 1e-14);
  }
}

TEST_CASE("closed-form diagonal solution") {
  const auto s0 = diagonal_state();
  const auto grid = linspace(0.0, 2.0, 41);
  for (auto backend : {GaugeBackend::Matched, GaugeBackend::Transport}) {
    SolveOptions so;
    so.backend = backend;
    const auto res = solve(spec_n(1), HamiltonianSpec::trace(), s0, grid, so);
    REQUIRE(res.traj.complete());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid[k];
      CHECK(std::abs(res.traj.states[k].q[0] - (1.0 - 0.375 * t)) < 1e-10);
      CHECK(std::abs(res.traj.states[k].q[1] - (-1.0 + 0.375 * t)) < 1e-10);
      CHECK((res.traj.states[k].g.mat() - s0.g.mat()).norm() < 1e-10);
    }
    const auto r = factorization_residual(res, HamiltonianSpec::trace(), s0, 0.5);
    CHECK(r.factorization < 1e-12);
    CHECK(r.theta < 1e-12);
  }
}

TEST_CASE("initial sample is reproduced exactly") {
  const auto s0 = hermitian_n1();
  const auto res = solve(spec_n(1), HamiltonianSpec::trace(), s0, linspace(0.0, 1.0, 11));
  CHECK(res.traj.states[0].q.vec() == s0.q.vec());
  CHECK(res.traj.states[0].g.mat() == s0.g.mat());
  CHECK(res.k_plus[0].isIdentity(0.0));
  CHECK(res.u_path[0].vec() == s0.q.vec());
}

TEST_CASE("agreement with the ODE solver, n = 1 worked instance") {
  const auto s0 = hermitian_n1();
  const auto grid = linspace(0.0, 1.0, 201);
  IntegratorConfig cfg;
  cfg.rtol = 1e-11;
  cfg.atol = 1e-13;
  const auto ode_run = integrate(spec_n(1), HamiltonianSpec::trace(), s0, grid, cfg);
  const auto fact = solve(spec_n(1), HamiltonianSpec::trace(), s0, grid);
  CHECK(sup_distance(ode_run, fact.traj) < 1e-6);
}

TEST_CASE("random Hermitian runs: agreement, isospectrality, residuals, gauge robustness") {
  for (int n = 1; n <= 3; ++n) {
    auto rng = sample::generator(41, static_cast<std::uint64_t>(n));
    const auto s0 = random_hermitian_state(rng, n);
    const HamiltonianSpec ham({{1, 1.0}, {2, 0.2}});
    const auto grid = linspace(0.0, 1.0, 201);
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    const auto ode_run = integrate(spec_n(n), ham, s0, grid, cfg);
    const auto matched = solve(spec_n(n), ham, s0, grid);
    REQUIRE(matched.traj.complete());
    CHECK(sup_distance(ode_run, matched.traj) < 1e-6);

    const Vector ev0 = sorted_eigenvalues(s0.g.mat());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK((sorted_eigenvalues(matched.traj.states[k].g.mat()) - ev0).cwiseAbs().maxCoeff() < 1e-10);
      for (std::size_t j = 0; j < matched.traj.conserved[k].size(); ++j) {
        CHECK(std::abs(matched.traj.conserved[k][j] - matched.traj.conserved[0][j]) < 1e-10);
      }
    }
    const auto r = factorization_residual(matched, ham, s0, 0.5);
    CHECK(r.factorization < 1e-8);
    CHECK(r.theta < 1e-8);
    CHECK(r.gauge_condition < 1e-8);
    CHECK(r.conjugation < 1e-9);

    SolveOptions unit_norm;
    unit_norm.normalization = ColumnNormalization::UnitNorm;
    SolveOptions transport;
    transport.backend = GaugeBackend::Transport;
    SolveOptions fd;
    fd.derivative = DerivativeSource::FiniteDifference;
    CHECK(sup_distance(matched.traj, solve(spec_n(n), ham, s0, grid, unit_norm).traj) < 1e-8);
    CHECK(sup_distance(matched.traj, solve(spec_n(n), ham, s0, grid, transport).traj) < 1e-8);
    CHECK(sup_distance(matched.traj, solve(spec_n(n), ham, s0, grid, fd).traj) < 1e-8);
  }
}

TEST_CASE("dropping the gauge integral violates the gauge condition") {
  auto rng = sample::generator(41, 77);
  const auto s0 = random_hermitian_state(rng, 2);
  const auto ham = HamiltonianSpec::trace();
  SolveOptions so;
  so.include_gauge_integral = false;
  so.normalization = ColumnNormalization::UnitNorm;
  const auto res = solve(spec_n(2), ham, s0, linspace(0.0, 1.0, 201), so);
  CHECK(factorization_residual(res, ham, s0, 0.5).gauge_condition > 1e-3);
}

TEST_CASE("flow property") {
  auto rng = sample::generator(41, 5);
  const auto s0 = random_hermitian_state(rng, 2);
  const auto ham = HamiltonianSpec::trace();
  const double t1 = 0.6, t2 = 0.4;
  const auto first = solve(spec_n(2), ham, s0, linspace(0.0, t1, 121));
  const auto second = solve(spec_n(2), ham, first.traj.states.back(), linspace(0.0, t2, 81));
  const auto whole = solve(spec_n(2), ham, s0, linspace(0.0, t1 + t2, 201));
  CHECK(state_distance(second.traj.states.back(), whole.traj.states.back()) < 1e-7);
}

TEST_CASE("coarse output grids are refined internally") {
  auto rng = sample::generator(41, 6);
  const auto s0 = random_hermitian_state(rng, 2);
  const auto ham = HamiltonianSpec::trace();
  const auto coarse = linspace(0.0, 2.0, 5);
  const auto res = solve(spec_n(2), ham, s0, coarse);
  CHECK(res.refinement > 1);
  IntegratorConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  CHECK(sup_distance(integrate(spec_n(2), ham, s0, coarse, cfg), res.traj) < 1e-8);
}

TEST_CASE("complex initial data") {
  auto rng = sample::generator(41, 8);
  const int n = 2;
  Vector q = sample::regular_q(rng, n).vec();
  q += Complex(0.0, 0.1) * sample::regular_q(rng, n).vec();
  const RSState s0{CartanVector::from(q), sample::group(rng, n, 0.3)};
  const HamiltonianSpec ham({{1, 1.0}}, {{2, Complex(0.3, 0.1)}});
  const auto grid = linspace(0.0, 1.0, 101);
  IntegratorConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  const auto res = solve(spec_n(n), ham, s0, grid);
  REQUIRE(res.traj.complete());
  CHECK(sup_distance(integrate(spec_n(n), ham, s0, grid, cfg), res.traj) < 1e-8);
}

TEST_CASE("preconditions") {
  const RMatrixSpec partial(SimpleSubset(Dimension(2), {1}), 0.5);
  auto rng = sample::generator(41, 9);
  const auto s0 = random_hermitian_state(rng, 2);
  CHECK_THROWS_AS(solve(partial, HamiltonianSpec::trace(), s0, linspace(0.0, 1.0, 3)), DimensionError);
  const RSState wall{CartanVector::zero(Dimension(1)), hermitian_n1().g};
  CHECK_THROWS_AS(solve(spec_n(1), HamiltonianSpec::trace(), wall, linspace(0.0, 1.0, 3)), SingularityError);
}

}  // TEST_SUITE
