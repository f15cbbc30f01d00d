#include "spinrs/rs_dynamics.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "spinrs/errors.hpp"

namespace spinrs {

HamiltonianSpec::HamiltonianSpec(PowerTracePoly power_traces,
                                 std::vector<CharacterTerm> characters)
    : power_traces_(std::move(power_traces)), characters_(std::move(characters)) {
  bool nonzero = false;
  for (const auto& t : power_traces_) {
    if (t.power < 1) throw ConfigError("HamiltonianSpec: powers must be >= 1");
    nonzero = nonzero || t.coeff != Complex(0.0);
  }
  for (const auto& c : characters_) {
    if (c.index < 1) throw ConfigError("HamiltonianSpec: character indices must be >= 1");
    nonzero = nonzero || c.coeff != Complex(0.0);
  }
  if (!nonzero) throw ConfigError("HamiltonianSpec: needs at least one nonzero coefficient");
}

HamiltonianSpec HamiltonianSpec::trace() { return HamiltonianSpec({{1, 1.0}}); }

Complex HamiltonianSpec::value(const Matrix& g) const {
  Complex v = eval_power_traces(g, power_traces_);
  if (!characters_.empty()) {
    const auto chi = fundamental_characters(g);
    for (const auto& c : characters_) {
      if (c.index > static_cast<int>(chi.size())) throw DimensionError("HamiltonianSpec: character index exceeds N");
      v += c.coeff * chi[static_cast<std::size_t>(c.index - 1)];
    }
  }
  return v;
}

AlgebraElement HamiltonianSpec::gradient(const Matrix& g) const {
  Matrix df = invariant_gradient(g, power_traces_).mat();
  for (const auto& c : characters_) df += c.coeff * character_gradient(g, c.index).mat();
  return AlgebraElement::from(df);
}

HamiltonianSpec HamiltonianSpec::negated() const {
  PowerTracePoly p = power_traces_;
  for (auto& t : p) t.coeff = -t.coeff;
  std::vector<CharacterTerm> c = characters_;
  for (auto& t : c) t.coeff = -t.coeff;
  return {p, c};
}

void Trajectory::push(double t, RSState s) {
  times.push_back(t);
  conserved.push_back(conserved_quantities(s.g.mat()));
  states.push_back(std::move(s));
}

namespace {

FieldValue field_at(const RMatrixSpec& spec, const HamiltonianSpec& ham, const CartanVector& q,
                    const Matrix& g) {
  const Matrix df = ham.gradient(g).mat();
  const Matrix rdf = apply_R(spec, q, df);
  return {-0.5 * proj_cartan(df).vec(), 0.5 * (rdf * g - g * rdf)};
}

}  // namespace

FieldValue eom_field(const RMatrixSpec& spec, const HamiltonianSpec& ham, const RSState& s) {
  return field_at(spec, ham, s.q, s.g.mat());
}

ComponentwiseValue eom_componentwise(const RMatrixSpec& spec, const RSState& s) {
  if (!spec.subset().is_full()) throw DimensionError("eom_componentwise: requires the full simple subset");
  const int size = spec.dim().size();
  const Matrix& g = s.g.mat();
  // ct(i, j) = coth((q_i - q_j)/2); guarded by the r-matrix wall check.
  const Matrix ct = 2.0 * phi_matrix(spec, s.q);
  ComponentwiseValue out{Vector::Zero(size), Matrix::Zero(size, size)};
  for (int i = 0; i < size; ++i) {
    Complex acc = 0.0;
    for (int k = 0; k < size; ++k) {
      if (k != i) acc += ct(i, k) * g(i, k) * g(k, i);
    }
    out.ddq(i) = 0.25 * acc;
  }
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (i == j) continue;
      Complex v = 0.25 * ct(i, j) * g(i, j) * (g(i, i) - g(j, j));
      for (int k = 0; k < size; ++k) {
        if (k == i || k == j) continue;
        v += 0.25 * (ct(k, j) - ct(i, k)) * g(i, k) * g(k, j);
      }
      out.dg(i, j) = v;
    }
    out.dg(i, i) = -2.0 * out.ddq(i);
  }
  return out;
}

namespace {

struct Packing {
  int size;

  ode::State pack(const RSState& s) const {
    ode::State y(size + size * size);
    y.head(size) = s.q.vec();
    y.tail(size * size) = s.g.mat().reshaped();
    return y;
  }

  Vector q(const ode::State& y) const { return y.head(size); }
  Matrix g(const ode::State& y) const { return y.tail(size * size).reshaped(size, size); }

  RSState unpack(const ode::State& y) const {
    return {CartanVector::from(q(y)), GroupElement::from(g(y))};
  }
};

}  // namespace

Trajectory integrate(const RMatrixSpec& spec, const HamiltonianSpec& ham, const RSState& s0,
                     std::span<const double> t_grid, const IntegratorConfig& cfg) {
  const int size = spec.dim().size();
  if (s0.q.size() != size || s0.g.mat().rows() != size) throw DimensionError("integrate: state size mismatch");
  const Packing pk{size};

  Trajectory traj;
  traj.solver = cfg.method == ode::Method::RK45 ? "rk45" : "rk4";
  traj.rtol = cfg.method == ode::Method::RK45 ? cfg.rtol : 0.0;
  traj.atol = cfg.method == ode::Method::RK45 ? cfg.atol : 0.0;

  auto rhs = [&](double, const ode::State& y) {
    // Stage values are off the constraint set by the local error, so the
    // field is evaluated on the raw matrix.
    Vector qv = pk.q(y);
    qv.array() -= qv.mean();
    const CartanVector q = CartanVector::from(qv);
    if (q.wall_distance(spec.subset()) <= cfg.wall_tol) {
      // Names the offending root.
      phi_matrix(RMatrixSpec(spec.subset(), spec.kappa(), cfg.wall_tol), q);
    }
    const FieldValue f = field_at(spec, ham, q, pk.g(y));
    ode::State dy(y.size());
    dy.head(size) = f.dq;
    dy.tail(size * size) = f.dg.reshaped();
    return dy;
  };

  auto project = [&](ode::State& y) {
    const Complex mean = y.head(size).mean();
    y.head(size).array() -= mean;
    Matrix g = pk.g(y);
    const Complex det = g.determinant();
    const Complex root = std::pow(det, 1.0 / static_cast<double>(size));
    y.tail(size * size) /= root;
    const double corr = std::max(std::abs(mean), std::abs(root - 1.0));
    if (corr > tolerance::kHard) {
      throw InvariantError("integrate: projection correction " + std::to_string(corr) +
                           " exceeds the hard limit");
    }
    return corr;
  };

  auto sample = [&](double t, const ode::State& y) { traj.push(t, pk.unpack(y)); };

  ode::Options opts;
  opts.method = cfg.method;
  opts.step = cfg.step;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  opts.max_steps = cfg.max_steps;
  ode::Stats stats;
  try {
    ode::integrate(rhs, pk.pack(s0), t_grid, opts, project, sample, stats);
  } catch (const SingularityError& e) {
    traj.breakdown_time = stats.t;
    traj.breakdown_reason = e.what();
  } catch (const StepSizeUnderflow& e) {
    traj.breakdown_time = stats.t;
    traj.breakdown_reason = e.what();
  }
  traj.steps = stats.accepted;
  traj.rejected = stats.rejected;
  traj.max_projection_correction = stats.max_correction;
  return traj;
}

std::vector<Complex> conserved_quantities(const Matrix& g) {
  const int n = static_cast<int>(g.rows()) - 1;
  std::vector<Complex> out;
  Matrix gk = g;
  for (int k = 1; k <= n; ++k) {
    if (k > 1) gk = gk * g;
    out.push_back(gk.trace());
  }
  return out;
}

double spectrum_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("spectrum_distance: size mismatch");
  const auto n = a.size();
  std::vector<bool> used_a(static_cast<std::size_t>(n), false), used_b(static_cast<std::size_t>(n), false);
  double worst = 0.0;
  for (Eigen::Index round = 0; round < n; ++round) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index bi = 0, bj = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used_a[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (used_b[static_cast<std::size_t>(j)]) continue;
        const double d = std::abs(a(i) - b(j));
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    used_a[static_cast<std::size_t>(bi)] = true;
    used_b[static_cast<std::size_t>(bj)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

ConservationReport conserved_report(const Trajectory& traj) {
  if (traj.states.empty()) throw Error("conserved_report: empty trajectory");
  ConservationReport rep;
  const auto& c0 = traj.conserved.front();
  rep.trace_drift.assign(c0.size(), 0.0);
  const Vector spec0 = Eigen::ComplexEigenSolver<Matrix>(traj.states.front().g.mat(), false).eigenvalues();
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    for (std::size_t k = 0; k < c0.size(); ++k) {
      const double d = std::abs(traj.conserved[s][k] - c0[k]) / std::max(1.0, std::abs(c0[k]));
      rep.trace_drift[k] = std::max(rep.trace_drift[k], d);
    }
    const Vector sp = Eigen::ComplexEigenSolver<Matrix>(traj.states[s].g.mat(), false).eigenvalues();
    rep.spectrum_drift = std::max(rep.spectrum_drift, spectrum_distance(spec0, sp));
  }
  return rep;
}

}  // namespace spinrs
