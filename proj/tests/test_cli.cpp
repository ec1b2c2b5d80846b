#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "hjb/cli.hpp"

using namespace hjb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hjb_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int counter() {
    static int n = 0;
    return n++;
  }
  std::string file(const std::string& name, const std::string& text) const {
    auto p = path / name;
    std::ofstream out(p);
    out << text;
    return p.string();
  }
  std::string read(const std::string& name) const {
    std::ifstream in(path / name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  bool has(const std::string& name) const { return fs::exists(path / name); }
};

const char* kConstantCost = R"(n = 1
m = 1
delta = 1
f.1 = 0
l = 1
omega = points: [[0]]
K1 = 0
K2 = 1
M = 0
l_nonneg = true
)";

const char* kFreeRide = R"(n = 1
m = 1
delta = 1
f.1 = u1
l = 0
omega = box: -1 1
samples_per_axis = 3
K1 = 0
K2 = 2
M = 1
l_nonneg = true
)";

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cfg(const RunConfig& cfg) {
  std::ostringstream out, err;
  int code = run(cfg, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("solve command writes a loadable field with the advertised horizon") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "solve";
  cfg.problem_path = tmp.file("p.txt", kConstantCost);
  cfg.box = {-1.0, 1.0};
  cfg.nodes = {41};
  cfg.dt = 0.01;
  cfg.eps = 1e-3;
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("solved: T=6.91") == 0);

  ValueField f = load_value_field((tmp.path / "out" / "value.csv").string(),
                                  (tmp.path / "out" / "value_meta.json").string());
  CHECK(f.horizon() == Catch::Approx(6.91).margin(1e-12));
  double expected = 1.0 - std::exp(-f.horizon());
  CHECK(f.value_at(0.0, std::vector<double>{0.0}) ==
        Catch::Approx(expected).margin(f.tolerance_budget()));
}

TEST_CASE("simulate on a costless problem certifies zero") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "simulate";
  cfg.problem_path = tmp.file("p.txt", kFreeRide);
  cfg.z = {0.0};
  cfg.const_u = {0.0};
  cfg.horizon = 2.0;
  cfg.sim_step = 0.05;
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  REQUIRE(tmp.has("out/certificate.json"));
  auto cert = nlohmann::json::parse(tmp.read("out/certificate.json"));
  CHECK(cert["J_T"].get<double>() == 0.0);
  CHECK(cert["lo"].get<double>() <= 0.0);
  CHECK(cert["hi"].get<double>() >= 0.0);
  CHECK(tmp.has("out/trajectory.csv"));
  CHECK(tmp.has("out/signal.csv"));
}

TEST_CASE("simulate derives the horizon from the tail tolerance") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "simulate";
  cfg.problem_path = tmp.file("p.txt", kFreeRide);
  cfg.z = {0.0};
  cfg.const_u = {0.0};
  cfg.eps = 1e-3;  // T = ln(K2 (1+M) / eps) = ln(4000)
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  REQUIRE(r.code == kExitOk);
  auto traj = tmp.read("out/trajectory.csv");
  auto last_line = traj.substr(traj.rfind('\n', traj.size() - 2) + 1);
  double t_end = std::stod(last_line);
  CHECK(t_end == Catch::Approx(std::log(4000.0)).margin(1e-9));
}

TEST_CASE("check passes on a freshly solved constant-cost field") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "check";
  cfg.problem_path = tmp.file("p.txt", kConstantCost);
  cfg.box = {-1.0, 1.0};
  cfg.nodes = {21};
  cfg.dt = 0.02;
  cfg.eps = 1e-3;
  cfg.points = 8;
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("classification: dini-solution") != std::string::npos);
  CHECK(r.out.find("check: PASS") != std::string::npos);
  auto j = nlohmann::json::parse(tmp.read("out/check_reports.json"));
  CHECK(j["pass"].get<bool>());
  CHECK(j["classification"]["classification"] == "dini-solution");
  CHECK(j["crosscheck"]["verdict"] == "PASS");
}

TEST_CASE("check on a saved field round-trips and guards the problem hash") {
  TempDir tmp;
  std::string p_path = tmp.file("p.txt", kConstantCost);

  RunConfig solve;
  solve.command = "solve";
  solve.problem_path = p_path;
  solve.box = {-1.0, 1.0};
  solve.nodes = {21};
  solve.dt = 0.02;
  solve.eps = 1e-3;
  solve.out_dir = (tmp.path / "solve").string();
  REQUIRE(run_cfg(solve).code == kExitOk);

  RunConfig check;
  check.command = "check";
  check.problem_path = p_path;
  check.field_csv = (tmp.path / "solve" / "value.csv").string();
  check.field_meta = (tmp.path / "solve" / "value_meta.json").string();
  check.points = 8;
  check.out_dir = (tmp.path / "check").string();
  REQUIRE(run_cfg(check).code == kExitOk);

  // Same field against a different problem: refused, not misclassified.
  check.problem_path = tmp.file("other.txt", kFreeRide);
  RunResult r = run_cfg(check);
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("hash") != std::string::npos);
}

TEST_CASE("certify accepts the policy rollout on a solved field") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "certify";
  cfg.problem_path = tmp.file("p.txt", kConstantCost);
  cfg.box = {-1.0, 1.0};
  cfg.nodes = {21};
  cfg.dt = 0.02;
  cfg.eps = 1e-3;
  cfg.points = 8;
  cfg.z = {0.0};
  cfg.sim_step = 0.02;
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  INFO(r.err << r.out);
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("certify: PASS") == 0);
  auto rep = nlohmann::json::parse(tmp.read("out/certify_report.json"));
  CHECK(rep["verdict"] == "PASS");
}

TEST_CASE("sandwich brackets the solved field between zero and the envelope") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "sandwich";
  cfg.problem_path = tmp.file("p.txt", kFreeRide);
  cfg.box = {-0.9, 0.9};
  cfg.nodes = {31};
  cfg.dt = 0.02;
  cfg.eps = 1e-3;
  cfg.points = 12;
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  INFO(r.err << r.out);
  REQUIRE(r.code == kExitOk);
  auto j = nlohmann::json::parse(tmp.read("out/sandwich.json"));
  REQUIRE(j["pass"].get<bool>());
  REQUIRE(!j["bounds"].empty());
  for (const auto& b : j["bounds"]) {
    CHECK(b["lower"].get<double>() == 0.0);
    CHECK(b["upper"].get<double>() > 0.0);
    CHECK(b["coherent"].get<bool>());
  }
}

TEST_CASE("bench command reports a passing summary") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "bench";
  cfg.bench_name = "constant-cost";
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("bench constant-cost: PASS") == 0);
  auto j = nlohmann::json::parse(tmp.read("out/bench_summary.json"));
  CHECK(j["name"] == "constant-cost");
  CHECK(j["pass"].get<bool>());
}

TEST_CASE("configuration mistakes exit with the config code") {
  TempDir tmp;
  std::string p_path = tmp.file("p.txt", kConstantCost);

  auto expect_config_error = [&](RunConfig cfg, const std::string& needle) {
    RunResult r = run_cfg(cfg);
    INFO("expected '" << needle << "' in: " << r.err);
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find(needle) != std::string::npos);
  };

  RunConfig base;
  base.problem_path = p_path;
  base.box = {-1.0, 1.0};
  base.nodes = {21};
  base.dt = 0.02;
  base.eps = 1e-3;
  base.out_dir = (tmp.path / "out").string();

  SECTION("unknown command") {
    RunConfig cfg = base;
    cfg.command = "frobnicate";
    expect_config_error(cfg, "unknown command");
  }
  SECTION("missing problem") {
    RunConfig cfg = base;
    cfg.command = "solve";
    cfg.problem_path = "";
    expect_config_error(cfg, "--problem");
  }
  SECTION("both horizon modes") {
    RunConfig cfg = base;
    cfg.command = "solve";
    cfg.horizon = 2.0;
    expect_config_error(cfg, "exactly one");
  }
  SECTION("neither horizon mode") {
    RunConfig cfg = base;
    cfg.command = "solve";
    cfg.eps.reset();
    expect_config_error(cfg, "exactly one");
  }
  SECTION("unknown tolerance name") {
    RunConfig cfg = base;
    cfg.command = "solve";
    cfg.tol["typo"] = 1.0;
    expect_config_error(cfg, "--tol");
  }
  SECTION("unknown benchmark") {
    RunConfig cfg;
    cfg.command = "bench";
    cfg.bench_name = "no-such-bench";
    expect_config_error(cfg, "unknown benchmark");
  }
  SECTION("wrong initial state dimension") {
    RunConfig cfg = base;
    cfg.command = "certify";
    cfg.z = {0.0, 0.0};
    expect_config_error(cfg, "--z");
  }
  SECTION("missing problem file") {
    RunConfig cfg = base;
    cfg.command = "solve";
    cfg.problem_path = (tmp.path / "absent.txt").string();
    expect_config_error(cfg, "absent.txt");
  }
}

TEST_CASE("failed checks exit with the check code") {
  TempDir tmp;
  // Demanding residuals far below the scheme's resolution makes the
  // classification fail honestly: the discrete field satisfies the equation
  // only to O(dt), never to 1e-9.
  RunConfig cfg;
  cfg.command = "check";
  cfg.problem_path = tmp.file("p.txt", kConstantCost);
  cfg.box = {-1.0, 1.0};
  cfg.nodes = {21};
  cfg.dt = 0.02;
  cfg.eps = 1e-3;
  cfg.points = 8;
  cfg.tol["hjb"] = 1e-9;
  cfg.out_dir = (tmp.path / "out").string();

  RunResult r = run_cfg(cfg);
  CHECK(r.code == kExitCheckFailed);
  CHECK(r.out.find("check: FAIL") != std::string::npos);
  auto j = nlohmann::json::parse(tmp.read("out/check_reports.json"));
  CHECK(!j["pass"].get<bool>());
}

TEST_CASE("identical configurations produce byte-identical outputs") {
  TempDir tmp;
  std::string p_path = tmp.file("p.txt", kConstantCost);

  auto solve_into = [&](const std::string& sub) {
    RunConfig cfg;
    cfg.command = "solve";
    cfg.problem_path = p_path;
    cfg.box = {-1.0, 1.0};
    cfg.nodes = {41};
    cfg.dt = 0.01;
    cfg.eps = 1e-3;
    cfg.out_dir = (tmp.path / sub).string();
    REQUIRE(run_cfg(cfg).code == kExitOk);
  };
  solve_into("a");
  solve_into("b");
  CHECK(tmp.read("a/value.csv") == tmp.read("b/value.csv"));
  CHECK(tmp.read("a/value_meta.json") == tmp.read("b/value_meta.json"));

  auto bench_into = [&](const std::string& sub) {
    RunConfig cfg;
    cfg.command = "bench";
    cfg.bench_name = "pure-discount-control";
    cfg.out_dir = (tmp.path / sub).string();
    REQUIRE(run_cfg(cfg).code == kExitOk);
  };
  bench_into("c");
  bench_into("d");
  CHECK(tmp.read("c/bench_summary.json") == tmp.read("d/bench_summary.json"));
}
