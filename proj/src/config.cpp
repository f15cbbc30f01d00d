#include "spinrs/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "spinrs/errors.hpp"

namespace spinrs {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(what + ": not finite");
  return x;
}

long integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
  return v.get<long>();
}

std::string text(const json& v, const std::string& what, std::initializer_list<const char*> choices) {
  if (!v.is_string()) throw ConfigError(what + ": expected a string");
  const auto s = v.get<std::string>();
  for (const char* c : choices) {
    if (s == c) return s;
  }
  throw ConfigError(what + ": invalid value '" + s + "'");
}

std::vector<double> vector_of(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], what));
  return out;
}

std::vector<std::vector<double>> matrix_of(const json& v, const std::string& what, int size) {
  if (!v.is_array() || static_cast<int>(v.size()) != size) {
    throw ConfigError(what + ": expected " + std::to_string(size) + " rows");
  }
  std::vector<std::vector<double>> out;
  for (const auto& row : v) {
    out.push_back(vector_of(row, what));
    if (static_cast<int>(out.back().size()) != size) {
      throw ConfigError(what + ": expected " + std::to_string(size) + " columns");
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& content) {
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(root, {"n", "pi_prime", "kappa", "hamiltonian", "initial", "time", "solver", "mode", "seed"},
                 "config");
  RunConfig cfg;
  cfg.n = static_cast<int>(integer(require(root, "n", "config"), "n"));
  if (cfg.n < 1) throw ConfigError("n: must be >= 1");
  const int size = cfg.n + 1;

  if (root.contains("pi_prime")) {
    const auto& p = root["pi_prime"];
    if (p.is_string()) {
      if (p.get<std::string>() != "full") throw ConfigError("pi_prime: expected \"full\" or a list");
    } else if (p.is_array()) {
      std::vector<int> members;
      for (const auto& m : p) {
        const long k = integer(m, "pi_prime");
        if (k < 1 || k > cfg.n) throw ConfigError("pi_prime: simple root index out of range");
        members.push_back(static_cast<int>(k));
      }
      if (std::set<int>(members.begin(), members.end()).size() != members.size()) {
        throw ConfigError("pi_prime: duplicate index");
      }
      cfg.pi_prime = members;
    } else {
      throw ConfigError("pi_prime: expected \"full\" or a list");
    }
  }
  if (root.contains("kappa")) cfg.kappa = number(root["kappa"], "kappa");
  if (cfg.kappa == 0.0) throw ConfigError("kappa: must be nonzero");

  const auto& ham = require(root, "hamiltonian", "config");
  reject_unknown(ham, {"power_traces", "characters"}, "hamiltonian");
  if (ham.contains("power_traces")) {
    if (!ham["power_traces"].is_array()) throw ConfigError("hamiltonian.power_traces: expected an array");
    for (const auto& t : ham["power_traces"]) {
      reject_unknown(t, {"power", "re", "im"}, "hamiltonian.power_traces");
      RunConfig::Power p{static_cast<int>(integer(require(t, "power", "power_traces"), "power")),
                         number(require(t, "re", "power_traces"), "re"),
                         t.contains("im") ? number(t["im"], "im") : 0.0};
      if (p.power < 1) throw ConfigError("hamiltonian.power_traces: power must be >= 1");
      cfg.power_traces.push_back(p);
    }
  }
  if (ham.contains("characters")) {
    if (!ham["characters"].is_array()) throw ConfigError("hamiltonian.characters: expected an array");
    for (const auto& t : ham["characters"]) {
      reject_unknown(t, {"index", "re", "im"}, "hamiltonian.characters");
      RunConfig::Character c{static_cast<int>(integer(require(t, "index", "characters"), "index")),
                             number(require(t, "re", "characters"), "re"),
                             t.contains("im") ? number(t["im"], "im") : 0.0};
      if (c.index < 1 || c.index > cfg.n) throw ConfigError("hamiltonian.characters: index out of range");
      cfg.characters.push_back(c);
    }
  }
  if (cfg.power_traces.empty() && cfg.characters.empty()) throw ConfigError("hamiltonian: no terms");

  if (root.contains("mode")) cfg.mode = text(root["mode"], "mode", {"hermitian", "complex"});

  const auto& init = require(root, "initial", "config");
  reject_unknown(init, {"q", "q_im", "g_re", "g_im"}, "initial");
  cfg.q = vector_of(require(init, "q", "initial"), "initial.q");
  if (static_cast<int>(cfg.q.size()) != size) throw ConfigError("initial.q: expected n+1 entries");
  if (init.contains("q_im")) {
    cfg.q_im = vector_of(init["q_im"], "initial.q_im");
    if (static_cast<int>(cfg.q_im.size()) != size) throw ConfigError("initial.q_im: expected n+1 entries");
  }
  cfg.g_re = matrix_of(require(init, "g_re", "initial"), "initial.g_re", size);
  cfg.g_im = init.contains("g_im") ? matrix_of(init["g_im"], "initial.g_im", size)
                                   : std::vector<std::vector<double>>(static_cast<std::size_t>(size),
                                                                      std::vector<double>(static_cast<std::size_t>(size), 0.0));

  if (root.contains("time")) {
    const auto& t = root["time"];
    reject_unknown(t, {"t0", "t1", "samples"}, "time");
    if (t.contains("t0")) cfg.t0 = number(t["t0"], "time.t0");
    if (t.contains("t1")) cfg.t1 = number(t["t1"], "time.t1");
    if (t.contains("samples")) cfg.samples = static_cast<int>(integer(t["samples"], "time.samples"));
  }
  if (!(cfg.t1 > cfg.t0)) throw ConfigError("time: t1 must exceed t0");
  if (cfg.samples < 2) throw ConfigError("time.samples: must be >= 2");

  if (root.contains("solver")) {
    const auto& s = root["solver"];
    reject_unknown(s, {"method", "rtol", "atol", "step", "max_steps", "gauge", "normalization"}, "solver");
    if (s.contains("method")) cfg.method = text(s["method"], "solver.method", {"rk45", "rk4", "factorization", "both"});
    if (s.contains("rtol")) cfg.rtol = number(s["rtol"], "solver.rtol");
    if (s.contains("atol")) cfg.atol = number(s["atol"], "solver.atol");
    if (s.contains("step")) cfg.step = number(s["step"], "solver.step");
    if (s.contains("max_steps")) cfg.max_steps = integer(s["max_steps"], "solver.max_steps");
    if (s.contains("gauge")) cfg.gauge = text(s["gauge"], "solver.gauge", {"matched", "transport"});
    if (s.contains("normalization")) {
      cfg.normalization = text(s["normalization"], "solver.normalization", {"unit_diagonal", "unit_norm"});
    }
  }
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0) || !(cfg.step > 0.0) || cfg.max_steps < 1) {
    throw ConfigError("solver: tolerances and step must be positive");
  }
  if ((cfg.method == "factorization" || cfg.method == "both") && cfg.pi_prime &&
      static_cast<int>(cfg.pi_prime->size()) != cfg.n) {
    throw ConfigError("solver.method: the factorization requires pi_prime = full");
  }

  if (root.contains("seed")) {
    const auto& s = root["seed"];
    if (!s.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }

  if (cfg.mode == "hermitian" && !cfg.q_im.empty()) {
    for (double v : cfg.q_im) {
      if (v != 0.0) throw ConfigError("initial.q_im: hermitian mode requires real q");
    }
    cfg.q_im.clear();
  }
  // Validates the state invariants now so that every later stage can assume them.
  make_state(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json root;
  root["n"] = cfg.n;
  if (cfg.pi_prime) {
    root["pi_prime"] = *cfg.pi_prime;
  } else {
    root["pi_prime"] = "full";
  }
  root["kappa"] = cfg.kappa;
  json ham;
  ham["power_traces"] = json::array();
  for (const auto& p : cfg.power_traces) ham["power_traces"].push_back({{"power", p.power}, {"re", p.re}, {"im", p.im}});
  ham["characters"] = json::array();
  for (const auto& c : cfg.characters) ham["characters"].push_back({{"index", c.index}, {"re", c.re}, {"im", c.im}});
  root["hamiltonian"] = ham;
  json init;
  init["q"] = cfg.q;
  if (cfg.mode == "complex") {
    init["q_im"] = cfg.q_im.empty() ? std::vector<double>(cfg.q.size(), 0.0) : cfg.q_im;
  }
  init["g_re"] = cfg.g_re;
  init["g_im"] = cfg.g_im;
  root["initial"] = init;
  root["time"] = {{"t0", cfg.t0}, {"t1", cfg.t1}, {"samples", cfg.samples}};
  root["solver"] = {{"method", cfg.method},     {"rtol", cfg.rtol},   {"atol", cfg.atol},
                    {"step", cfg.step},         {"max_steps", cfg.max_steps},
                    {"gauge", cfg.gauge},       {"normalization", cfg.normalization}};
  root["mode"] = cfg.mode;
  root["seed"] = cfg.seed;
  return root.dump(2) + "\n";
}

RMatrixSpec make_spec(const RunConfig& cfg) {
  const Dimension dim(cfg.n);
  return {cfg.pi_prime ? SimpleSubset(dim, *cfg.pi_prime) : SimpleSubset::full(dim), cfg.kappa};
}

HamiltonianSpec make_hamiltonian(const RunConfig& cfg) {
  PowerTracePoly p;
  for (const auto& t : cfg.power_traces) p.push_back({t.power, Complex(t.re, t.im)});
  std::vector<CharacterTerm> c;
  for (const auto& t : cfg.characters) c.push_back({t.index, Complex(t.re, t.im)});
  return {p, c};
}

RSState make_state(const RunConfig& cfg) {
  const int size = cfg.n + 1;
  Vector q(size);
  Matrix g(size, size);
  for (int i = 0; i < size; ++i) {
    q(i) = Complex(cfg.q[static_cast<std::size_t>(i)],
                   cfg.q_im.empty() ? 0.0 : cfg.q_im[static_cast<std::size_t>(i)]);
    for (int j = 0; j < size; ++j) {
      g(i, j) = Complex(cfg.g_re[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                        cfg.g_im[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  if (cfg.mode == "hermitian") {
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ConfigError("initial.g: hermitian mode requires a Hermitian matrix");
    }
  }
  try {
    RSState s{CartanVector::from(q), GroupElement::from(g)};
    if ((s.q.vec() - q).cwiseAbs().maxCoeff() > tolerance::kHard ||
        (s.g.mat() - g).cwiseAbs().maxCoeff() > tolerance::kHard) {
      throw ConfigError("initial: state is further than 1e-6 from the constraint set");
    }
    return s;
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
}

std::vector<double> time_grid(const RunConfig& cfg) {
  std::vector<double> t(static_cast<std::size_t>(cfg.samples));
  for (int k = 0; k < cfg.samples; ++k) {
    t[static_cast<std::size_t>(k)] = cfg.t0 + (cfg.t1 - cfg.t0) * k / (cfg.samples - 1);
  }
  t.back() = cfg.t1;
  return t;
}

IntegratorConfig make_integrator(const RunConfig& cfg) {
  IntegratorConfig ic;
  ic.method = cfg.method == "rk4" ? ode::Method::RK4 : ode::Method::RK45;
  ic.step = cfg.step;
  ic.rtol = cfg.rtol;
  ic.atol = cfg.atol;
  ic.max_steps = cfg.max_steps;
  return ic;
}

SolveOptions make_solve_options(const RunConfig& cfg) {
  SolveOptions so;
  so.backend = cfg.gauge == "transport" ? GaugeBackend::Transport : GaugeBackend::Matched;
  so.normalization =
      cfg.normalization == "unit_norm" ? ColumnNormalization::UnitNorm : ColumnNormalization::UnitDiagonal;
  return so;
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::vector<std::string> csv_header(int n, bool complex_mode) {
  const int size = n + 1;
  std::vector<std::string> h{"t"};
  for (int i = 0; i < size; ++i) h.push_back("q_" + std::to_string(i));
  if (complex_mode) {
    for (int i = 0; i < size; ++i) h.push_back("im_q_" + std::to_string(i));
  }
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const std::string ij = std::to_string(i) + std::to_string(j);
      h.push_back("re_g_" + ij);
      h.push_back("im_g_" + ij);
    }
  }
  for (int k = 1; k <= n; ++k) h.push_back("c_" + std::to_string(k));
  if (complex_mode) {
    for (int k = 1; k <= n; ++k) h.push_back("im_c_" + std::to_string(k));
  }
  return h;
}

std::string trajectory_csv(const Trajectory& traj, bool complex_mode) {
  if (traj.states.empty()) return "";
  const int size = traj.states.front().q.size();
  std::string out;
  const auto header = csv_header(size - 1, complex_mode);
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& s = traj.states[k];
    out += fmt(traj.times[k]);
    for (int i = 0; i < size; ++i) out += "," + fmt(s.q[i].real());
    if (complex_mode) {
      for (int i = 0; i < size; ++i) out += "," + fmt(s.q[i].imag());
    }
    const Matrix& g = s.g.mat();
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) out += "," + fmt(g(i, j).real()) + "," + fmt(g(i, j).imag());
    }
    for (const auto& c : traj.conserved[k]) out += "," + fmt(c.real());
    if (complex_mode) {
      for (const auto& c : traj.conserved[k]) out += "," + fmt(c.imag());
    }
    out += "\n";
  }
  return out;
}

std::vector<CsvRow> parse_trajectory_csv(const std::string& content, int n, bool complex_mode) {
  const int size = n + 1;
  const auto header = csv_header(n, complex_mode);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty input");
  {
    std::string expected;
    for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
    if (line != expected) throw ConfigError("csv: unexpected header");
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != header.size()) throw ConfigError("csv: wrong column count");
    std::size_t c = 1;
    Vector q(size);
    for (int i = 0; i < size; ++i) q(i) = v[c++];
    if (complex_mode) {
      for (int i = 0; i < size; ++i) q(i) += Complex(0.0, v[c++]);
    }
    Matrix g(size, size);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        g(i, j) = Complex(v[c], v[c + 1]);
        c += 2;
      }
    }
    rows.push_back({v[0], RSState{CartanVector::from(q), GroupElement::from(g)}});
  }
  return rows;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace spinrs
