#include "spinrs/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "spinrs/errors.hpp"

namespace spinrs {

using json = nlohmann::ordered_json;

double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  const std::size_t n = std::min(a.states.size(), b.states.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k]))) {
      throw Error("trajectory_distance: sample times differ");
    }
    const double dq = (a.states[k].q.vec() - b.states[k].q.vec()).cwiseAbs().maxCoeff();
    const double dg = (a.states[k].g.mat() - b.states[k].g.mat()).norm();
    worst = std::max(worst, dq + dg);
  }
  return worst;
}

namespace {

using Clock = std::chrono::steady_clock;

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Run {
  Trajectory traj;
  std::optional<FactorizationResult> fact;
  std::optional<FactorizationResiduals> residuals;
  double seconds = 0.0;
};

Trajectory failed_start(const std::string& solver, double t0, const std::string& reason) {
  Trajectory t;
  t.solver = solver;
  t.breakdown_time = t0;
  t.breakdown_reason = reason;
  return t;
}

Run run_ode(const RunConfig& cfg, ode::Method method, double rtol, double atol) {
  IntegratorConfig ic = make_integrator(cfg);
  ic.method = method;
  ic.rtol = rtol;
  ic.atol = atol;
  const auto grid = time_grid(cfg);
  const auto start = Clock::now();
  Run r;
  r.traj = integrate(make_spec(cfg), make_hamiltonian(cfg), make_state(cfg), grid, ic);
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

Run run_factorization(const RunConfig& cfg, const SolveOptions& so) {
  const auto grid = time_grid(cfg);
  const auto spec = make_spec(cfg);
  const auto ham = make_hamiltonian(cfg);
  const auto s0 = make_state(cfg);
  const auto start = Clock::now();
  Run r;
  try {
    FactorizationResult fr = solve(spec, ham, s0, grid, so);
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    r.residuals = factorization_residual(fr, ham, s0, cfg.kappa);
    r.traj = fr.traj;
    r.fact = std::move(fr);
  } catch (const SingularityError& e) {
    r.traj = failed_start("factorization", cfg.t0, e.what());
  }
  return r;
}

json run_summary(const Run& r) {
  json j;
  j["solver"] = r.traj.solver;
  j["complete"] = r.traj.complete();
  j["breakdown_time"] = nullable(r.traj.breakdown_time);
  j["breakdown_reason"] = r.traj.breakdown_reason.empty() ? json(nullptr) : json(r.traj.breakdown_reason);
  json drifts;
  if (!r.traj.states.empty()) {
    const auto rep = conserved_report(r.traj);
    drifts["trace"] = rep.trace_drift;
    drifts["spectrum"] = rep.spectrum_drift;
  } else {
    drifts["trace"] = nullptr;
    drifts["spectrum"] = nullptr;
  }
  j["drifts"] = drifts;
  if (r.residuals) {
    j["factorization_residual"] = r.residuals->factorization;
    j["theta_residual"] = r.residuals->theta;
    j["gauge_condition_residual"] = r.residuals->gauge_condition;
    j["gauge_condition_refinement"] = r.residuals->gauge_refinement;
    j["conjugation_residual"] = r.residuals->conjugation;
    j["gauge_backend"] = r.fact->backend;
  } else {
    j["factorization_residual"] = nullptr;
    j["theta_residual"] = nullptr;
    j["gauge_condition_residual"] = nullptr;
    j["gauge_condition_refinement"] = nullptr;
    j["conjugation_residual"] = nullptr;
    j["gauge_backend"] = nullptr;
  }
  j["wall_clock_s"] = r.seconds;
  json grid;
  grid["samples"] = r.traj.times.size();
  grid["t0"] = r.traj.times.empty() ? json(nullptr) : json(r.traj.times.front());
  grid["t1"] = r.traj.times.empty() ? json(nullptr) : json(r.traj.times.back());
  if (r.fact) {
    grid["refinement"] = r.fact->refinement;
    grid["work"] = r.fact->work;
    grid["quadrature_error"] = r.fact->quadrature_error;
    grid["eigen_reconstruction_error"] = r.fact->max_reconstruction_error;
  } else {
    grid["steps"] = r.traj.steps;
    grid["rejected"] = r.traj.rejected;
    grid["rtol"] = r.traj.rtol;
    grid["atol"] = r.traj.atol;
    grid["max_projection_correction"] = r.traj.max_projection_correction;
  }
  j["grid"] = grid;
  return j;
}

}  // namespace

SimulateOutcome simulate(const RunConfig& cfg) {
  std::vector<Run> runs;
  if (cfg.method == "rk45" || cfg.method == "both") {
    runs.push_back(run_ode(cfg, ode::Method::RK45, cfg.rtol, cfg.atol));
  }
  if (cfg.method == "rk4") runs.push_back(run_ode(cfg, ode::Method::RK4, cfg.rtol, cfg.atol));
  if (cfg.method == "factorization" || cfg.method == "both") {
    runs.push_back(run_factorization(cfg, make_solve_options(cfg)));
  }

  SimulateOutcome out;
  json summary;
  summary["n"] = cfg.n;
  summary["mode"] = cfg.mode;
  summary["method"] = cfg.method;
  summary["runs"] = json::array();
  for (const auto& r : runs) {
    summary["runs"].push_back(run_summary(r));
    if (!r.traj.complete()) out.exit_code = exit_code::kBreakdown;
  }
  summary["cross_agreement"] =
      runs.size() == 2 ? json(trajectory_distance(runs[0].traj, runs[1].traj)) : json(nullptr);
  summary["status"] = out.exit_code == exit_code::kOk ? "ok" : "breakdown";
  out.summary_json = summary.dump(2) + "\n";
  for (auto& r : runs) out.runs.push_back(std::move(r.traj));
  return out;
}

int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  const auto result = simulate(cfg);
  const bool complex_mode = cfg.mode == "complex";
  for (const auto& t : result.runs) {
    const auto path = out_dir / ("trajectory_" + t.solver + ".csv");
    write_file_atomic(path, trajectory_csv(t, complex_mode));
    out << "wrote " << path.string() << " (" << t.times.size() << " samples)\n";
    if (!t.complete()) {
      out << t.solver << ": breakdown at t = " << *t.breakdown_time << ": " << t.breakdown_reason << "\n";
    }
  }
  write_file_atomic(out_dir / "summary.json", result.summary_json);
  out << "wrote " << (out_dir / "summary.json").string() << "\n";
  return result.exit_code;
}

int cmd_check(const std::string& suite, const CheckOptions& options, std::ostream& out) {
  const auto results = run_suite(suite, options);
  bool ok = true;
  char line[256];
  for (const auto& r : results) {
    ok = ok && r.passed;
    const double shown = r.lower_bound ? r.median : r.max_residual;
    std::snprintf(line, sizeof line, "%-20s %s=%.3e %s %.1e samples=%d resampled=%d %s", r.name.c_str(),
                  r.lower_bound ? "median" : "max_residual", shown, r.lower_bound ? ">" : "<", r.tolerance,
                  r.samples, r.resampled, r.passed ? "PASS" : "FAIL");
    out << line;
    if (!r.note.empty()) out << " (" << r.note << ")";
    out << "\n";
  }
  return ok ? exit_code::kOk : exit_code::kCheckFailed;
}

int cmd_compare(const RunConfig& cfg, const CompareOptions& options,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out) {
  if (options.rtols.empty()) throw ConfigError("compare: empty rtol list");
  for (double r : options.rtols) {
    if (!(r > 0.0)) throw ConfigError("compare: rtol values must be positive");
  }
  if (cfg.pi_prime && static_cast<int>(cfg.pi_prime->size()) != cfg.n) {
    throw ConfigError("compare: the factorization requires pi_prime = full");
  }
  const Run ref = run_ode(cfg, ode::Method::RK45, 1e-13, 1e-15);
  int code = ref.traj.complete() ? exit_code::kOk : exit_code::kBreakdown;

  json table;
  table["reference"] = {{"solver", "rk45"}, {"rtol", 1e-13}, {"atol", 1e-15}, {"steps", ref.traj.steps}};
  table["rows"] = json::array();
  auto add_row = [&](const std::string& solver, json rtol, const Run& r, long cost) {
    json row;
    row["solver"] = solver;
    row["rtol"] = rtol;
    row["sup_error"] = trajectory_distance(r.traj, ref.traj);
    row["complete"] = r.traj.complete();
    row["cost"] = cost;
    row["wall_clock_s"] = options.timing ? json(r.seconds) : json(nullptr);
    if (!r.traj.complete()) code = exit_code::kBreakdown;
    table["rows"].push_back(row);
  };
  for (double rtol : options.rtols) {
    const Run r = run_ode(cfg, ode::Method::RK45, rtol, rtol * 1e-3);
    add_row("rk45", rtol, r, r.traj.steps);
  }
  for (auto backend : {GaugeBackend::Matched, GaugeBackend::Transport}) {
    SolveOptions so = make_solve_options(cfg);
    so.backend = backend;
    const Run r = run_factorization(cfg, so);
    const std::string name = backend == GaugeBackend::Matched ? "factorization/matched" : "factorization/transport";
    add_row(name, nullptr, r, r.fact ? r.fact->work : 0L);
  }

  char line[256];
  std::snprintf(line, sizeof line, "%-26s %-10s %-12s %-8s %s\n", "solver", "rtol", "sup_error", "cost",
                "wall_clock_s");
  out << line;
  for (const auto& row : table["rows"]) {
    const std::string rt = row["rtol"].is_null() ? "-" : [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.1e", row["rtol"].get<double>());
      return std::string(b);
    }();
    const std::string wc = row["wall_clock_s"].is_null() ? "-" : [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.4f", row["wall_clock_s"].get<double>());
      return std::string(b);
    }();
    std::snprintf(line, sizeof line, "%-26s %-10s %-12.3e %-8ld %s\n", row["solver"].get<std::string>().c_str(),
                  rt.c_str(), row["sup_error"].get<double>(), row["cost"].get<long>(), wc.c_str());
    out << line;
  }
  if (out_dir) write_file_atomic(*out_dir / "compare.json", table.dump(2) + "\n");
  return code;
}

}  // namespace spinrs
