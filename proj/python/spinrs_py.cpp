#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spinrs/commands.hpp"
#include "spinrs/errors.hpp"

namespace py = pybind11;
using namespace spinrs;

namespace {

using PiPrime = std::optional<std::vector<int>>;
using PowerMap = std::map<int, Complex>;

RMatrixSpec make_rspec(int n, const PiPrime& pi_prime, double kappa) {
  const Dimension dim(n);
  return RMatrixSpec(pi_prime ? SimpleSubset(dim, *pi_prime) : SimpleSubset::full(dim), kappa);
}

int dim_of(const Vector& q) { return static_cast<int>(q.size()) - 1; }

HamiltonianSpec make_ham(const PowerMap& powers, const PowerMap& characters) {
  PowerTracePoly poly;
  for (const auto& [k, c] : powers) poly.push_back({k, c});
  std::vector<CharacterTerm> chars;
  for (const auto& [m, c] : characters) chars.push_back({m, c});
  return HamiltonianSpec(poly, chars);
}

RSState make_state(const Vector& q, const Matrix& g) {
  return {CartanVector::from(q), GroupElement::from(g)};
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::list qs, gs, cs;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    qs.append(Vector(tr.states[k].q.vec()));
    gs.append(Matrix(tr.states[k].g.mat()));
    cs.append(tr.conserved[k]);
  }
  py::dict d;
  d["times"] = tr.times;
  d["q"] = qs;
  d["g"] = gs;
  d["conserved"] = cs;
  d["solver"] = tr.solver;
  d["complete"] = tr.complete();
  d["breakdown_time"] = tr.breakdown_time;
  d["breakdown_reason"] = tr.breakdown_reason;
  d["steps"] = tr.steps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_spinrs, m) {
  m.doc() = "Hyperbolic spin Ruijsenaars-Schneider models on U x SL(N+1) x U";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  m.def(
      "apply_R",
      [](const Vector& q, const Matrix& x, const PiPrime& pi_prime, double kappa) {
        return apply_R(make_rspec(dim_of(q), pi_prime, kappa), CartanVector::from(q), x);
      },
      py::arg("q"), py::arg("x"), py::arg("pi_prime") = py::none(), py::arg("kappa") = 0.5);

  m.def(
      "mdybe_residual",
      [](const Vector& q, const Matrix& a, const Matrix& b, const PiPrime& pi_prime, double kappa) {
        return mdybe_residual(make_rspec(dim_of(q), pi_prime, kappa), CartanVector::from(q), a, b);
      },
      py::arg("q"), py::arg("a"), py::arg("b"), py::arg("pi_prime") = py::none(), py::arg("kappa") = 0.5);

  m.def(
      "theta_defect",
      [](const Vector& q, const Matrix& a, double kappa) {
        return theta_defect(make_rspec(dim_of(q), std::nullopt, kappa), CartanVector::from(q), a);
      },
      py::arg("q"), py::arg("a"), py::arg("kappa") = 0.5);

  m.def(
      "eom_field",
      [](const Vector& q, const Matrix& g, const PowerMap& powers, const PowerMap& characters,
         const PiPrime& pi_prime, double kappa) {
        const auto f = eom_field(make_rspec(dim_of(q), pi_prime, kappa), make_ham(powers, characters),
                                 make_state(q, g));
        return py::make_tuple(f.dq, f.dg);
      },
      py::arg("q"), py::arg("g"), py::arg("power_traces") = PowerMap{{1, 1.0}},
      py::arg("characters") = PowerMap{}, py::arg("pi_prime") = py::none(), py::arg("kappa") = 0.5);

  m.def(
      "integrate",
      [](const Vector& q, const Matrix& g, const std::vector<double>& t_grid, const PowerMap& powers,
         const PowerMap& characters, const PiPrime& pi_prime, double kappa, double rtol, double atol) {
        IntegratorConfig cfg;
        cfg.rtol = rtol;
        cfg.atol = atol;
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = integrate(make_rspec(dim_of(q), pi_prime, kappa), make_ham(powers, characters), make_state(q, g),
                         t_grid, cfg);
        }
        return trajectory_dict(tr);
      },
      py::arg("q"), py::arg("g"), py::arg("t_grid"), py::arg("power_traces") = PowerMap{{1, 1.0}},
      py::arg("characters") = PowerMap{}, py::arg("pi_prime") = py::none(), py::arg("kappa") = 0.5,
      py::arg("rtol") = 1e-9, py::arg("atol") = 1e-12);

  m.def(
      "solve_factorization",
      [](const Vector& q, const Matrix& g, const std::vector<double>& t_grid, const PowerMap& powers,
         const PowerMap& characters, double kappa, const std::string& backend) {
        if (backend != "matched" && backend != "transport") {
          throw ConfigError("backend must be \"matched\" or \"transport\"");
        }
        SolveOptions so;
        so.backend = backend == "matched" ? GaugeBackend::Matched : GaugeBackend::Transport;
        const auto ham = make_ham(powers, characters);
        const auto s0 = make_state(q, g);
        FactorizationResult res;
        FactorizationResiduals r;
        {
          py::gil_scoped_release release;
          res = solve(make_rspec(dim_of(q), std::nullopt, kappa), ham, s0, t_grid, so);
          r = factorization_residual(res, ham, s0, kappa);
        }
        auto d = trajectory_dict(res.traj);
        d["k_plus"] = res.k_plus;
        d["residuals"] = py::dict(py::arg("factorization") = r.factorization, py::arg("theta") = r.theta,
                                  py::arg("gauge_condition") = r.gauge_condition,
                                  py::arg("conjugation") = r.conjugation);
        return d;
      },
      py::arg("q"), py::arg("g"), py::arg("t_grid"), py::arg("power_traces") = PowerMap{{1, 1.0}},
      py::arg("characters") = PowerMap{}, py::arg("kappa") = 0.5, py::arg("backend") = "matched");

  m.def(
      "run_check",
      [](const std::string& suite, int n, const PiPrime& pi_prime, double kappa, std::uint64_t seed, int samples,
         bool negative_control) {
        CheckOptions o;
        o.n = n;
        o.pi_prime = pi_prime;
        o.kappa = kappa;
        o.seed = seed;
        o.samples = samples;
        o.negative_control = negative_control;
        std::vector<CheckResult> results;
        {
          py::gil_scoped_release release;
          results = run_suite(suite, o);
        }
        py::list out;
        for (const auto& r : results) {
          out.append(py::dict(py::arg("name") = r.name, py::arg("max_residual") = r.max_residual,
                              py::arg("median") = r.median, py::arg("tolerance") = r.tolerance,
                              py::arg("lower_bound") = r.lower_bound, py::arg("samples") = r.samples,
                              py::arg("passed") = r.passed, py::arg("note") = r.note));
        }
        return out;
      },
      py::arg("suite"), py::arg("n") = 2, py::arg("pi_prime") = py::none(), py::arg("kappa") = 0.5,
      py::arg("seed") = 12345, py::arg("samples") = 1000, py::arg("negative_control") = false);

  m.def(
      "simulate_config",
      [](const std::string& config_json) {
        const auto outcome = simulate(parse_config(config_json));
        return py::make_tuple(outcome.exit_code, outcome.summary_json);
      },
      py::arg("config_json"), "Runs a JSON configuration; returns (exit_code, summary_json).");

  m.def("canonical_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        py::arg("config_json"));
}
