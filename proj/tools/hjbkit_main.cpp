#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "hjb/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"value-function toolkit for discounted control problems"};
  hjb::RunConfig cfg;
  double eps = 0.0;
  double horizon = 0.0;
  std::vector<std::string> tol_args;

  app.add_option("--cmd", cfg.command,
                 "solve|simulate|check|certify|sandwich|bench")
      ->required();
  app.add_option("--problem", cfg.problem_path, "problem description file");
  app.add_option("--box", cfg.box, "state box, lo,hi per axis")
      ->delimiter(',');
  app.add_option("--nodes", cfg.nodes, "grid nodes per axis")->delimiter(',');
  app.add_option("--dt", cfg.dt, "time step");
  auto* eps_opt =
      app.add_option("--eps", eps, "tail tolerance fixing the horizon");
  auto* horizon_opt = app.add_option("--horizon", horizon, "explicit horizon");
  app.add_option("--tau", cfg.tau, "start time");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--seed", cfg.seed, "seed for randomized probes");
  app.add_option("--tol", tol_args, "tolerance override, name=value")
      ->take_all();
  app.add_option("--bench", cfg.bench_name, "benchmark name");
  app.add_option("--z", cfg.z, "initial state")->delimiter(',');
  app.add_option("--const-u", cfg.const_u, "constant control value")
      ->delimiter(',');
  app.add_option("--step", cfg.sim_step, "integrator step bound");
  app.add_option("--field", cfg.field_csv, "saved value field CSV");
  app.add_option("--meta", cfg.field_meta, "saved value field metadata");
  app.add_option("--points", cfg.points, "probe count for checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hjb::kExitConfig;
  }

  if (eps_opt->count() > 0) cfg.eps = eps;
  if (horizon_opt->count() > 0) cfg.horizon = horizon;
  for (const std::string& a : tol_args) {
    auto sep = a.find('=');
    if (sep == std::string::npos || sep == 0 || sep + 1 == a.size()) {
      std::cerr << "error: --tol expects name=value, got '" << a << "'\n";
      return hjb::kExitConfig;
    }
    try {
      std::size_t used = 0;
      double v = std::stod(a.substr(sep + 1), &used);
      if (used != a.size() - sep - 1) throw std::invalid_argument(a);
      cfg.tol[a.substr(0, sep)] = v;
    } catch (const std::exception&) {
      std::cerr << "error: bad --tol value in '" << a << "'\n";
      return hjb::kExitConfig;
    }
  }

  return hjb::run(cfg, std::cout, std::cerr);
}
