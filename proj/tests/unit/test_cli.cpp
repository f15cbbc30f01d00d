#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spinrs/commands.hpp"
#include "spinrs/errors.hpp"

using namespace spinrs;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SPINRS_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spinrs_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json base_json() { return nlohmann::json::parse(slurp(kConfigs / "hermitian_n1.json")); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("shipped configs round-trip byte for byte") {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const std::string text = slurp(entry.path());
    CHECK(serialize_config(parse_config(text)) == text);
  }
}

TEST_CASE("invalid configs are rejected") {
  auto bad = [](const nlohmann::json& j) {
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  };
  CHECK_NOTHROW(parse_config(base_json().dump()));
  {
    auto j = base_json();
    j["extra"] = 1;
    bad(j);
  }
  {
    auto j = base_json();
    j["solver"]["tolerance"] = 1e-3;
    bad(j);
  }
  {
    auto j = base_json();
    j["initial"]["g_re"][0][1] = 0.2;  // not Hermitian
    bad(j);
  }
  {
    auto j = base_json();
    j["initial"]["g_re"][0][0] = 3.0;  // det far from 1
    bad(j);
  }
  {
    auto j = base_json();
    j["initial"]["q"] = {1.0, 0.0};  // not zero-sum
    bad(j);
  }
  {
    auto j = base_json();
    j["solver"]["atol"] = 0.0;
    bad(j);
  }
  {
    auto j = base_json();
    j["pi_prime"] = nlohmann::json::array({1});
    j["n"] = 2;
    bad(j);  // wrong sizes for n = 2
  }
  {
    auto j = base_json();
    j["initial"]["q_im"] = {0.1, -0.1};
    bad(j);  // imaginary q only in complex mode
  }
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
}

TEST_CASE("CSV header and parse-back") {
  const auto h = csv_header(1, false);
  const std::vector<std::string> expected{"t", "q_0", "q_1", "re_g_00", "im_g_00", "re_g_01", "im_g_01",
                                          "re_g_10", "im_g_10", "re_g_11", "im_g_11", "c_1"};
  CHECK(h == expected);
  const auto hc = csv_header(2, true);
  CHECK(hc.size() == 1 + 3 + 3 + 18 + 2 + 2);

  const auto cfg = load_config(kConfigs / "complex_n2.json");
  auto short_cfg = cfg;
  short_cfg.samples = 11;
  const auto out = simulate(short_cfg);
  REQUIRE(!out.runs.empty());
  const auto& traj = out.runs.front();
  const auto rows = parse_trajectory_csv(trajectory_csv(traj, true), 2, true);
  REQUIRE(rows.size() == traj.states.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].t == traj.times[k]);
    CHECK((rows[k].state.q.vec() - traj.states[k].q.vec()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(rows[k].state.g.mat() == traj.states[k].g.mat());
  }
}

TEST_CASE("simulate on the diagonal config writes outputs and agrees across solvers") {
  const auto dir = scratch("diag");
  std::ostringstream log;
  const auto cfg = load_config(kConfigs / "diagonal_n1.json");
  CHECK(cmd_simulate(cfg, dir, log) == exit_code::kOk);
  CHECK(fs::exists(dir / "trajectory_rk45.csv"));
  CHECK(fs::exists(dir / "trajectory_factorization.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["status"] == "ok");
  CHECK(summary["cross_agreement"].get<double>() < 1e-9);
  const auto rows = parse_trajectory_csv(slurp(dir / "trajectory_factorization.csv"), 1, false);
  const auto& last = rows.back();
  CHECK(std::abs(last.state.q[0] - (1.0 - 0.375)) < 1e-10);
  for (const auto& entry : fs::directory_iterator(dir)) {
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("wall config reports a breakdown") {
  const auto dir = scratch("wall");
  std::ostringstream log;
  CHECK(cmd_simulate(load_config(kConfigs / "wall_n1.json"), dir, log) == exit_code::kBreakdown);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["status"] == "breakdown");
  CHECK(summary["runs"][0]["breakdown_reason"].get<std::string>().find("(0,1)") != std::string::npos);
}

TEST_CASE("check passes and its negative control fails") {
  CheckOptions o;
  o.n = 2;
  o.samples = 40;
  std::ostringstream out;
  CHECK(cmd_check("mdybe", o, out) == exit_code::kOk);
  o.negative_control = true;
  CHECK(cmd_check("mdybe", o, out) == exit_code::kCheckFailed);
  CHECK_THROWS_AS(cmd_check("nonsense", o, out), ConfigError);
}

TEST_CASE("check results do not depend on the worker count") {
  CheckOptions o;
  o.n = 3;
  o.samples = 64;
  o.threads = 1;
  const auto one = run_suite("all", o);
  o.threads = 4;
  const auto four = run_suite("all", o);
  REQUIRE(one.size() == four.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].max_residual == four[k].max_residual);
    CHECK(one[k].median == four[k].median);
  }
}

TEST_CASE("compare is deterministic without timing and rejects an empty rtol list") {
  auto cfg = load_config(kConfigs / "hermitian_n1.json");
  cfg.samples = 21;
  CompareOptions co{{1e-6, 1e-9}, false};
  const auto d1 = scratch("cmp1"), d2 = scratch("cmp2");
  std::ostringstream out;
  CHECK(cmd_compare(cfg, co, d1, out) == exit_code::kOk);
  CHECK(cmd_compare(cfg, co, d2, out) == exit_code::kOk);
  CHECK(slurp(d1 / "compare.json") == slurp(d2 / "compare.json"));
  const auto j = nlohmann::json::parse(slurp(d1 / "compare.json"));
  REQUIRE(j["rows"].size() == 4);
  for (const auto& row : j["rows"]) CHECK(row["sup_error"].get<double>() < 1e-4);
  CHECK_THROWS_AS(cmd_compare(cfg, {{}, false}, d1, out), ConfigError);
}

}  // TEST_SUITE
