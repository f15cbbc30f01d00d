#include "spinrs/factorization_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "grid_calculus.hpp"
#include "spinrs/errors.hpp"

namespace spinrs {

Matrix build_M(const HamiltonianSpec& ham, const RSState& s0, double kappa, double t) {
  const Matrix df = ham.gradient(s0.g.mat()).mat();
  const Matrix eu = s0.q.vec().array().exp().matrix().asDiagonal();
  return matrix_exp(-t * kappa * df) * eu;
}

namespace {

struct Decomposition {
  Vector lambda;
  Matrix vectors;
};

Decomposition decompose(const Matrix& m) {
  const auto size = m.rows();
  Matrix off = m;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() == 0.0) return {m.diagonal(), Matrix::Identity(size, size)};
  Eigen::ComplexEigenSolver<Matrix> es(m, true);
  if (es.info() != Eigen::Success) throw Error("eigen_path: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// |log(a / b)| on the principal branch.
double log_distance(Complex a, Complex b) {
  if (a == Complex(0.0) || b == Complex(0.0)) return std::numeric_limits<double>::infinity();
  return std::abs(std::log(a / b));
}

double relative_gap(const Vector& lambda) {
  double gap = std::numeric_limits<double>::infinity();
  const double scale = std::max(lambda.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    for (Eigen::Index j = i + 1; j < lambda.size(); ++j) {
      gap = std::min(gap, std::abs(lambda(i) - lambda(j)) / scale);
    }
  }
  return gap;
}

struct Assignment {
  std::vector<int> perm;  // perm[i] = index in the new decomposition for old column i
  bool ambiguous = false;
};

// Greedy nearest-log matching of `cand` to `target`, with an audit flagging
// any row whose best candidate is far or not clearly separated.
Assignment assign(const Vector& target, const Vector& cand) {
  const auto n = target.size();
  std::vector<std::tuple<double, int, int>> pairs;
  Assignment out;
  out.perm.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity(), second = best;
    for (int j = 0; j < n; ++j) {
      const double d = log_distance(cand(j), target(i));
      pairs.emplace_back(d, i, j);
      if (d < best) {
        second = best;
        best = d;
      } else if (d < second) {
        second = d;
      }
    }
    if (best >= 0.5 || second < 3.0 * best) out.ambiguous = true;
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (const auto& [d, i, j] : pairs) {
    if (out.perm[static_cast<std::size_t>(i)] >= 0 || used[static_cast<std::size_t>(j)]) continue;
    out.perm[static_cast<std::size_t>(i)] = j;
    used[static_cast<std::size_t>(j)] = true;
  }
  return out;
}

Decomposition permuted(const Decomposition& d, const std::vector<int>& perm) {
  const auto n = d.lambda.size();
  Decomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.lambda(i) = d.lambda(perm[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = d.vectors.col(perm[static_cast<std::size_t>(i)]);
  }
  return out;
}

struct Breakdown {
  double time;
};

struct Tracker {
  const MatrixPath& m;
  const EigenPathOptions& options;

  // Continues `prev` (decomposition at t_prev, columns in path order) to t,
  // bisecting the interval while the assignment is ambiguous.
  Decomposition advance(const Decomposition& prev, double t_prev, double t, int depth,
                        int& substeps, std::vector<int>& perm) const {
    const Matrix mt = m(t);
    Decomposition raw = decompose(mt);
    if (relative_gap(raw.lambda) < options.gap_tol) throw Breakdown{t};
    // First-order prediction of the continued eigenvalues.
    const Vector pred = prev.vectors.partialPivLu().solve(mt * prev.vectors).diagonal();
    Assignment a = assign(pred, raw.lambda);
    if (a.ambiguous) {
      if (depth >= options.max_bisections) {
        throw ContinuityError("eigen_path: ambiguous eigenvalue assignment", t);
      }
      const double mid = 0.5 * (t_prev + t);
      std::vector<int> ignored;
      const Decomposition half = advance(prev, t_prev, mid, depth + 1, substeps, ignored);
      ++substeps;
      return advance(half, mid, t, depth + 1, substeps, perm);
    }
    perm = a.perm;
    return permuted(raw, perm);
  }
};

// Column scaling under the chosen convention.
Matrix normalize_columns(const Matrix& v, ColumnNormalization mode) {
  Matrix x = v;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Complex pivot = x(j, j);
    if (std::abs(pivot) < 1e-300) throw ContinuityError("eigen_path: eigenvector lost its diagonal component", 0.0);
    if (mode == ColumnNormalization::UnitDiagonal) {
      x.col(j) /= pivot;
    } else {
      x.col(j) *= std::conj(pivot) / std::abs(pivot);
      x.col(j) /= x.col(j).norm();
    }
  }
  return x;
}

// Pi_h(x^{-1} dx/dt) for the normalized frame x of M with eigenvalues lambda.
Vector analytic_log_derivative(const Matrix& x, const Vector& lambda, const Matrix& m_dot,
                               ColumnNormalization mode) {
  const auto n = x.rows();
  const auto lu = x.partialPivLu();
  const Matrix c = lu.solve(m_dot * x);
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) a(i, j) = c(i, j) / (lambda(j) - lambda(i));
    }
  }
  // The diagonal of x^{-1} dx/dt is fixed by differentiating the
  // normalization constraint of each column.
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vector w = x * a.col(j);  // off-diagonal part of dx_j/dt
    if (mode == ColumnNormalization::UnitDiagonal) {
      a(j, j) = -w(j) / x(j, j);
    } else {
      const double re = -(x.col(j).adjoint() * w)(0).real();
      const double im = -w(j).imag() / x(j, j).real();
      a(j, j) = Complex(re, im);
    }
  }
  Vector diag = a.diagonal();
  diag.array() -= diag.mean();
  return diag;
}

}  // namespace

EigenPath eigen_path(const MatrixPath& m, std::span<const double> grid,
                     const EigenPathOptions& options, const MatrixPath& m_dot) {
  EigenPath path;
  if (grid.empty()) return path;
  const Tracker tracker{m, options};

  std::vector<Decomposition> decs;
  std::vector<MatchRecord> log;
  try {
    Decomposition d0 = decompose(m(grid[0]));
    if (relative_gap(d0.lambda) < options.gap_tol) throw Breakdown{grid[0]};
    std::vector<int> id(static_cast<std::size_t>(d0.lambda.size()));
    for (std::size_t i = 0; i < id.size(); ++i) id[i] = static_cast<int>(i);
    decs.push_back(d0);
    log.push_back({grid[0], id, 0, 1.0});
    for (std::size_t k = 1; k < grid.size(); ++k) {
      int substeps = 0;
      std::vector<int> perm;
      decs.push_back(tracker.advance(decs.back(), grid[k - 1], grid[k], 0, substeps, perm));
      log.push_back({grid[k], perm, substeps, 1.0});
    }
  } catch (const Breakdown& b) {
    path.breakdown_time = b.time;
  }
  if (decs.empty()) return path;

  // Global column order from the anchor sample.
  if (options.anchor) {
    const std::size_t a = std::min(options.anchor_index, decs.size() - 1);
    const Assignment order = assign(*options.anchor, decs[a].lambda);
    for (auto& d : decs) d = permuted(d, order.perm);
    for (auto& rec : log) {
      std::vector<int> p(order.perm.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = rec.permutation[static_cast<std::size_t>(order.perm[i])];
      rec.permutation = p;
    }
  }

  const auto size = decs.front().lambda.size();
  const double root = 1.0 / static_cast<double>(size);
  const Complex unity = std::polar(1.0, 2.0 * std::numbers::pi * root);
  std::vector<Matrix> frames;
  std::vector<Complex> roots;
  for (const auto& d : decs) {
    frames.push_back(normalize_columns(d.vectors, options.normalization));
    Complex c = std::pow(frames.back().determinant(), root);
    if (!roots.empty()) {
      // Root branch continuous along the path.
      Complex best = c;
      for (Eigen::Index k = 1; k < size; ++k) {
        c *= unity;
        if (std::abs(c - roots.back()) < std::abs(best - roots.back())) best = c;
      }
      c = best;
    }
    roots.push_back(c);
  }
  if (options.anchor) {
    // Principal branch at the anchor, so an identity frame stays the identity.
    const std::size_t a = std::min(options.anchor_index, decs.size() - 1);
    const Complex principal = std::pow(frames[a].determinant(), root);
    const Complex shift = principal / roots[a];
    for (auto& c : roots) c *= shift;
  }

  for (std::size_t k = 0; k < decs.size(); ++k) {
    path.times.push_back(grid[k]);
    path.x_plus.push_back(frames[k] / roots[k]);
    path.d.push_back(decs[k].lambda);
    log[k].det_root = roots[k];
    const Matrix recon = path.x_plus.back() * decs[k].lambda.asDiagonal() * path.x_plus.back().inverse();
    path.max_reconstruction_error = std::max(path.max_reconstruction_error, (recon - m(grid[k])).norm());
    if (m_dot) {
      path.log_derivative.push_back(
          analytic_log_derivative(frames[k], decs[k].lambda, m_dot(grid[k]), options.normalization));
    }
  }
  path.match_log = std::move(log);
  return path;
}

namespace {

double richardson_estimate(std::span<const double> t, const std::vector<Vector>& f,
                           const std::vector<Vector>& fine) {
  // Too few nodes for a meaningful comparison: force refinement.
  if (t.size() < 9) return std::numeric_limits<double>::infinity();
  std::vector<double> tc;
  std::vector<Vector> fc;
  for (std::size_t k = 0; k < t.size(); k += 2) {
    tc.push_back(t[k]);
    fc.push_back(f[k]);
  }
  const auto coarse = detail::cumulative_integral<Vector>(tc, fc);
  double err = 0.0;
  for (std::size_t k = 0; k < tc.size(); ++k) {
    err = std::max(err, (fine[2 * k] - coarse[k]).cwiseAbs().maxCoeff());
  }
  return err / 15.0;
}

}  // namespace

GaugeResult gauge_correct(const EigenPath& path, const CartanVector& u0, double kappa,
                          const GaugeOptions& options) {
  GaugeResult out;
  if (path.times.empty()) return out;
  const auto size = u0.size();
  out.u = log_diagonal_continuous(path.d, u0).u;

  std::vector<Vector> rate;
  if (options.derivative == DerivativeSource::Analytic) {
    if (path.log_derivative.size() != path.times.size()) {
      throw Error("gauge_correct: path has no analytic log-derivative");
    }
    rate = path.log_derivative;
  } else {
    const auto dx = detail::differentiate<Matrix>(path.times, path.x_plus);
    for (std::size_t k = 0; k < dx.size(); ++k) {
      Vector diag = path.x_plus[k].partialPivLu().solve(dx[k]).diagonal();
      diag.array() -= diag.mean();
      rate.push_back(diag);
    }
  }
  if (path.times.size() >= 2) {
    out.integral = detail::cumulative_integral<Vector>(path.times, rate);
    out.quadrature_error = richardson_estimate(path.times, rate, out.integral);
  } else {
    out.integral.assign(1, Vector::Zero(size));
  }

  for (std::size_t k = 0; k < path.times.size(); ++k) {
    Vector expo = kappa * (out.u[k].vec() - u0.vec());
    if (options.include_integral) expo -= out.integral[k];
    out.k_plus.push_back(path.x_plus[k] * expo.array().exp().matrix().asDiagonal());
  }
  return out;
}

namespace {

struct PathPiece {
  std::vector<double> times;
  std::vector<Matrix> k_plus;
  std::vector<CartanVector> u;
  std::vector<Matrix> x_plus;
  std::optional<double> breakdown;
  std::string breakdown_reason;
  int refinement = 1;
  long work = 0;
  double quadrature_error = 0.0;
  double reconstruction_error = 0.0;
};

std::vector<double> refine(std::span<const double> grid, int r) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    for (int s = 0; s < r; ++s) out.push_back(grid[k] + (grid[k + 1] - grid[k]) * s / r);
  }
  out.push_back(grid.back());
  return out;
}

PathPiece solve_matched(const MatrixPath& m, const MatrixPath& m_dot, const CartanVector& u0,
                        double kappa, std::span<const double> rel, const SolveOptions& options) {
  EigenPathOptions eo;
  eo.normalization = options.normalization;
  eo.gap_tol = options.gap_tol;
  eo.anchor = u0.vec().array().exp().matrix();
  eo.anchor_index = 0;
  GaugeOptions go{options.derivative, options.include_gauge_integral};

  for (int r = 1;; r *= 2) {
    const auto fine = refine(rel, r);
    EigenPath path;
    GaugeResult gauge;
    try {
      path = eigen_path(m, fine, eo, options.derivative == DerivativeSource::Analytic ? m_dot : MatrixPath{});
      gauge = gauge_correct(path, u0, kappa, go);
    } catch (const ContinuityError& e) {
      if (2 * r > options.max_refinement) throw;
      continue;
    }
    if (gauge.quadrature_error > options.quadrature_tol && 2 * r <= options.max_refinement &&
        !path.breakdown_time) {
      continue;
    }
    if (gauge.quadrature_error > options.quadrature_tol && !path.breakdown_time) {
      throw AccuracyError("solve: gauge quadrature error " + std::to_string(gauge.quadrature_error) +
                          " above tolerance at refinement " + std::to_string(r) +
                          "; use a finer output grid");
    }
    PathPiece out;
    out.refinement = r;
    out.work = static_cast<long>(path.times.size());
    for (const auto& rec : path.match_log) out.work += rec.substeps;
    out.quadrature_error = gauge.quadrature_error;
    out.reconstruction_error = path.max_reconstruction_error;
    if (path.breakdown_time) {
      out.breakdown = path.breakdown_time;
      out.breakdown_reason = "eigenvalue collision in the factorization";
    }
    for (std::size_t k = 0; k < path.times.size(); k += static_cast<std::size_t>(r)) {
      out.times.push_back(path.times[k]);
      out.k_plus.push_back(gauge.k_plus[k]);
      out.u.push_back(gauge.u[k]);
      out.x_plus.push_back(path.x_plus[k]);
    }
    return out;
  }
}

PathPiece solve_transport(const MatrixPath& m, const MatrixPath& m_dot, const CartanVector& u0,
                          double kappa, std::span<const double> rel, const SolveOptions& options) {
  const int size = u0.size();
  // Integrate in tau = sign * t so the grid is increasing.
  const double sign = rel.back() < rel.front() ? -1.0 : 1.0;
  std::vector<double> tau;
  for (double t : rel) tau.push_back(sign * t);

  auto frame = [size](const ode::State& y) -> Matrix { return y.reshaped(size, size); };
  auto eigenvalues = [&](const Matrix& x, double t) -> Vector {
    return x.partialPivLu().solve(m(t) * x).diagonal();
  };

  auto rhs = [&](double s, const ode::State& y) -> ode::State {
    const double t = sign * s;
    const Matrix x = frame(y);
    const auto lu = x.partialPivLu();
    const Vector lambda = lu.solve(m(t) * x).diagonal();
    if (relative_gap(lambda) < options.gap_tol) throw Breakdown{t};
    const Matrix c = sign * lu.solve(m_dot(t) * x);
    Matrix a = Matrix::Zero(size, size);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        if (i != j) a(i, j) = c(i, j) / (lambda(j) - lambda(i));
      }
    }
    return (x * a).reshaped();
  };

  PathPiece out;
  std::vector<Vector> lambdas;
  std::vector<Matrix> frames;
  auto sample = [&](double s, const ode::State& y) {
    const double t = sign * s;
    out.times.push_back(t);
    frames.push_back(frame(y));
    lambdas.push_back(eigenvalues(frames.back(), t));
  };

  ode::Options opts;
  opts.method = ode::Method::RK45;
  opts.rtol = options.transport_rtol;
  opts.atol = options.transport_atol;
  ode::Stats stats;
  const ode::State y0 = Matrix::Identity(size, size).reshaped();
  try {
    ode::integrate(rhs, y0, tau, opts, {}, sample, stats);
  } catch (const Breakdown& b) {
    out.breakdown = b.time;
    out.breakdown_reason = "eigenvalue collision in the factorization";
  } catch (const StepSizeUnderflow& e) {
    out.breakdown = sign * stats.t;
    out.breakdown_reason = e.what();
  }
  out.work = stats.accepted;
  if (frames.empty()) return out;
  out.u = log_diagonal_continuous(lambdas, u0).u;
  const double root = 1.0 / static_cast<double>(size);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    // det x stays 1 in this gauge up to the integration error.
    const Matrix x = frames[k] / std::pow(frames[k].determinant(), root);
    const Vector expo = kappa * (out.u[k].vec() - u0.vec());
    out.k_plus.push_back(x * expo.array().exp().matrix().asDiagonal());
    const Matrix recon = x * lambdas[k].asDiagonal() * x.inverse();
    out.reconstruction_error = std::max(out.reconstruction_error, (recon - m(out.times[k])).norm());
  }
  return out;
}

}  // namespace

FactorizationResult solve(const RMatrixSpec& spec, const HamiltonianSpec& ham, const RSState& s0,
                          std::span<const double> t_grid, const SolveOptions& options) {
  if (!spec.subset().is_full()) throw DimensionError("solve: the factorization requires pi' = pi");
  if (s0.q.size() != spec.dim().size()) throw DimensionError("solve: state size mismatch");
  if (t_grid.empty()) throw Error("solve: empty time grid");
  if (!s0.q.regular(spec.subset(), spec.wall_tol())) {
    phi_matrix(spec, s0.q);  // names the root
  }

  const double t0 = t_grid.front();
  std::vector<double> rel;
  for (double t : t_grid) rel.push_back(t - t0);

  const double kappa = spec.kappa();
  const Matrix df = ham.gradient(s0.g.mat()).mat();
  const Matrix eu = s0.q.vec().array().exp().matrix().asDiagonal();
  const MatrixPath m = [&](double t) -> Matrix { return matrix_exp(-t * kappa * df) * eu; };
  const MatrixPath m_dot = [&](double t) -> Matrix { return -kappa * df * m(t); };

  PathPiece piece = options.backend == GaugeBackend::Matched
                        ? solve_matched(m, m_dot, s0.q, kappa, rel, options)
                        : solve_transport(m, m_dot, s0.q, kappa, rel, options);

  FactorizationResult res;
  res.backend = options.backend == GaugeBackend::Matched ? "matched" : "transport";
  res.options = options;
  res.refinement = piece.refinement;
  res.work = piece.work;
  res.quadrature_error = piece.quadrature_error;
  res.max_reconstruction_error = piece.reconstruction_error;
  res.traj.solver = "factorization";
  res.traj.steps = static_cast<long>(piece.times.size());
  const Matrix& g0 = s0.g.mat();
  for (std::size_t k = 0; k < piece.times.size(); ++k) {
    const double t = t0 + piece.times[k];
    if (k == 0) {
      res.traj.push(t, s0);
      res.k_plus.push_back(Matrix::Identity(g0.rows(), g0.cols()));
      res.u_path.push_back(s0.q);
      if (!piece.x_plus.empty()) res.x_plus.push_back(piece.x_plus[0]);
      continue;
    }
    const CartanVector& u = piece.u[k];
    if (!u.regular(spec.subset(), spec.wall_tol())) {
      res.breakdown_time = t;
      res.traj.breakdown_time = t;
      res.traj.breakdown_reason = "u(t) reached a wall";
      return res;
    }
    const Matrix& kp = piece.k_plus[k];
    const Matrix g = kp.partialPivLu().solve(g0 * kp);
    res.traj.push(t, RSState{u, GroupElement::from(g)});
    res.k_plus.push_back(kp);
    res.u_path.push_back(u);
    if (!piece.x_plus.empty()) res.x_plus.push_back(piece.x_plus[k]);
  }
  if (piece.breakdown) {
    res.breakdown_time = t0 + *piece.breakdown;
    res.traj.breakdown_time = res.breakdown_time;
    res.traj.breakdown_reason = piece.breakdown_reason;
  }
  return res;
}

namespace {

double gauge_condition_estimate(std::span<const double> times, const std::vector<Matrix>& k_plus,
                                const std::vector<CartanVector>& u_path, double kappa) {
  std::vector<Vector> us;
  for (const auto& u : u_path) us.push_back(u.vec());
  const auto dk = detail::differentiate<Matrix>(times, k_plus);
  const auto du = detail::differentiate<Vector>(times, us);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    Vector diag = k_plus[k].partialPivLu().solve(dk[k]).diagonal();
    diag.array() -= diag.mean();
    worst = std::max(worst, (diag - kappa * du[k]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

FactorizationResiduals factorization_residual(const FactorizationResult& result,
                                              const HamiltonianSpec& ham, const RSState& s0,
                                              double kappa) {
  FactorizationResiduals out;
  const auto& times = result.traj.times;
  if (times.empty()) return out;
  const double t0 = times.front();
  const Matrix& g0 = s0.g.mat();
  const Matrix df = ham.gradient(g0).mat();
  const Vector u0 = s0.q.vec();
  const Matrix eu0 = u0.array().exp().matrix().asDiagonal();

  for (std::size_t k = 0; k < times.size(); ++k) {
    const Matrix& kp = result.k_plus[k];
    const Vector& u = result.u_path[k].vec();
    const Matrix e = matrix_exp(-(times[k] - t0) * kappa * df);
    const Matrix eu = u.array().exp().matrix().asDiagonal();
    const Matrix emu = (-u).array().exp().matrix().asDiagonal();
    const auto lu = kp.partialPivLu();
    out.factorization = std::max(out.factorization, (e * eu0 - kp * eu * lu.inverse()).norm());
    const Matrix k_minus = eu0 * kp * emu;
    out.theta = std::max(out.theta, (kp * k_minus.inverse() - e).norm());
    out.conjugation = std::max(out.conjugation, (lu.solve(g0 * kp) - result.traj.states[k].g.mat()).norm());
  }

  if (times.size() < 5) return out;
  out.gauge_condition = gauge_condition_estimate(times, result.k_plus, result.u_path, kappa);
  const RMatrixSpec spec(SimpleSubset::full(Dimension(s0.q.size() - 1)), kappa);
  for (int m = 2; m <= 64 && out.gauge_condition > 1e-12; m *= 2) {
    const auto fine_grid = refine(times, m);
    const auto fine = solve(spec, ham, s0, fine_grid, result.options);
    if (fine.k_plus.size() != fine_grid.size()) break;
    double est = gauge_condition_estimate(fine_grid, fine.k_plus, fine.u_path, kappa);
    for (std::size_t k = 0; k < times.size(); ++k) {
      est = std::max(est, (fine.k_plus[k * static_cast<std::size_t>(m)] - result.k_plus[k]).norm());
    }
    const bool converging = est < out.gauge_condition / 4.0;
    if (est < out.gauge_condition) {
      out.gauge_condition = est;
      out.gauge_refinement = m;
    }
    if (!converging) break;
  }
  return out;
}

}  // namespace spinrs
