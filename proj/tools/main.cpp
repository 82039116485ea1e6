#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "lpmech/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lagrange-Poincare mechanics: axiom checks, simulation, reduction, stages and Noether drift"};
  app.require_subcommand(1);

  lpmech::CliOverrides ov;
  std::string config, system, method, out;
  double t_end = 0.0, dt = 0.0, tol = 0.0;
  std::uint64_t seed = 0;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"check-axioms", "sample the bracket axioms of the bundle (exit 2 on violation)"},
      {"simulate", "integrate the LP equations and write trajectory.csv and report.json"},
      {"reduce", "build the reduced bundle of a principal scenario and integrate the reduced flow"},
      {"stages", "compare direct reduction with reduction by a normal subgroup and then the quotient"},
      {"noether", "write the Noether current, its drift and the predicted drift per generator"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--system", system, "catalog system name");
    sub->add_option("--t-end", t_end, "end of the time span");
    sub->add_option("--dt", dt, "integration step");
    sub->add_option("--method", method, "rk4 or euler");
    sub->add_option("--seed", seed, "seed for sampled checks (fallback: LPMECH_SEED)");
    sub->add_option("--tol", tol, "tolerance for sampled checks");
    sub->add_option("--out", out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? lpmech::kExitOk : lpmech::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--config")) ov.config_path = config;
  if (chosen->count("--system")) ov.system = system;
  if (chosen->count("--t-end")) ov.t_end = t_end;
  if (chosen->count("--dt")) ov.dt = dt;
  if (chosen->count("--method")) ov.method = method;
  if (chosen->count("--seed")) ov.seed = seed;
  if (chosen->count("--tol")) ov.tol = tol;
  if (chosen->count("--out")) ov.out_dir = out;
  if (const char* env = std::getenv("LPMECH_SEED")) ov.env_seed = std::string(env);

  return lpmech::run_command(chosen->get_name(), ov, std::cout, std::cerr);
}
