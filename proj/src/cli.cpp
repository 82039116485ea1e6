#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "json.hpp"
#include "lpmech/cli.hpp"
#include "lpmech/errors.hpp"
#include "lpmech/io.hpp"
#include "lpmech/reduction.hpp"

namespace lpmech {

namespace {

using ojson = nlohmann::ordered_json;

std::string out_path(const RunConfig& cfg, const std::string& file) {
  return (std::filesystem::path(cfg.out_dir) / file).string();
}

void write_json(const RunConfig& cfg, const std::string& file, const ojson& j) {
  write_file_atomic(out_path(cfg, file), j.dump(2) + "\n");
}

std::vector<double> to_list(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ojson state_json(const LPState& s) {
  ojson j;
  j["q"] = to_list(s.q);
  j["qdot"] = to_list(s.qdot);
  j["v"] = to_list(s.v);
  return j;
}

ojson run_header(const RunConfig& cfg, const std::string& command) {
  ojson j;
  j["command"] = command;
  j["system"] = cfg.record.name;
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  return j;
}

const ScenarioData& require_scenario(const RunConfig& cfg, const std::string& command) {
  if (!cfg.record.scenario) {
    throw ConfigError(command + " needs a system obtained by reduction (rigid_body, heavy_top, heisenberg_stages "
                                "or an inline 'scenario')");
  }
  return *cfg.record.scenario;
}

/// Runs `body`; on a numerical failure writes failure.json with the initial state, then rethrows.
template <class F>
auto with_failure_dump(const RunConfig& cfg, const std::string& command, std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const SingularHessian& e) {
    ojson j = run_header(cfg, command);
    j["error"] = "SingularHessian";
    j["message"] = e.what();
    j["initial"] = state_json(cfg.record.initial);
    write_json(cfg, "failure.json", j);
    err << "state dump written to " << out_path(cfg, "failure.json") << "\n";
    throw;
  } catch (const ChartViolation& e) {
    ojson j = run_header(cfg, command);
    j["error"] = "ChartViolation";
    j["message"] = e.what();
    j["initial"] = state_json(cfg.record.initial);
    write_json(cfg, "failure.json", j);
    err << "state dump written to " << out_path(cfg, "failure.json") << "\n";
    throw;
  }
}

std::string group_csv(const Reconstruction& rec) {
  std::string out = "t";
  const Eigen::Index N = rec.g.empty() ? 0 : rec.g.front().rows();
  for (Eigen::Index r = 0; r < N; ++r) {
    for (Eigen::Index c = 0; c < N; ++c) out += ",g" + std::to_string(r + 1) + std::to_string(c + 1);
  }
  out += "\n";
  for (size_t i = 0; i < rec.g.size(); ++i) {
    std::vector<double> row = {rec.reduced.times[i]};
    for (Eigen::Index r = 0; r < N; ++r) {
      for (Eigen::Index c = 0; c < N; ++c) row.push_back(rec.g[i](r, c));
    }
    out += csv_row(row);
  }
  return out;
}

/// Integrates the configured system; reduced systems also carry the group curve.
struct Run {
  Trajectory traj;
  std::optional<Reconstruction> rec;
};

Run integrate(const RunConfig& cfg) {
  Run run;
  if (cfg.record.scenario) {
    const ScenarioData& sd = *cfg.record.scenario;
    run.rec = integrate_reconstructed(sd.scenario, cfg.record.lagrangian, cfg.record.initial, sd.g0, cfg.t_start,
                                      cfg.t_end, cfg.dt, cfg.method);
    run.traj = run.rec->reduced;
  } else {
    run.traj = integrate_lp(cfg.record.lagrangian, cfg.record.initial, cfg.t_start, cfg.t_end, cfg.dt, cfg.method);
  }
  run.traj.seed = cfg.seed;
  return run;
}

/// Current, its five-point time derivative and the predicted drift on the interior grid.
struct CurrentSeries {
  std::vector<double> times, current, dJdt, rhs;
};

CurrentSeries current_series(const RunConfig& cfg, const Run& run, const Eigen::VectorXd& eta) {
  CurrentSeries cs;
  const auto& states = run.traj.states;
  if (states.size() < 5) throw ConfigError("noether needs at least five time samples; lower time.dt");
  if (cfg.record.action) {
    NoetherSeries ns = noether_drift_residual(cfg.record.lagrangian, *cfg.record.action, run.traj, eta);
    cs.times = ns.times;
    cs.current = ns.current;
    cs.dJdt = ns.dJdt;
    for (size_t i = 0; i < ns.dJdt.size(); ++i) cs.rhs.push_back(ns.dJdt[i] - ns.residual[i]);
    return cs;
  }
  const ScenarioData& sd = *cfg.record.scenario;
  std::vector<double> j(states.size()), rhs(states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    const Eigen::VectorXd eta_bar = body_of_spatial(sd.scenario.group, run.rec->g[i], eta);
    j[i] = reduced_noether(sd.scenario, cfg.record.lagrangian, states[i], eta_bar);
    rhs[i] = reduced_noether_drift_rhs(sd.scenario, cfg.record.lagrangian, states[i], eta_bar);
  }
  const double h = run.traj.step;
  for (size_t i = 2; i + 2 < states.size(); ++i) {
    cs.times.push_back(run.traj.times[i]);
    cs.current.push_back(j[i]);
    cs.dJdt.push_back((-j[i + 2] + 8.0 * j[i + 1] - 8.0 * j[i - 1] + j[i - 2]) / (12.0 * h));
    cs.rhs.push_back(rhs[i]);
  }
  return cs;
}

double max_abs_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<std::string> command_names() { return {"check-axioms", "simulate", "reduce", "stages", "noether"}; }

int cmd_check_axioms(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  const AxiomReport rep = check_axioms(cfg.record.lagrangian.bundle, cfg.samples, cfg.seed, cfg.tol);
  write_file_atomic(out_path(cfg, "axioms.json"), rep.to_json() + "\n");
  write_file_atomic(out_path(cfg, "axioms.txt"), rep.to_text());
  ojson summary = run_header(cfg, "check-axioms");
  summary["axioms_passed"] = rep.all_passed();
  bool ok = rep.all_passed();
  for (const auto& c : rep.conditions) {
    if (!c.passed) err << "axiom condition '" << c.name << "' violated: residual " << format_double(c.max_residual)
                       << "\n";
  }
  if (cfg.record.action) {
    const InvarianceCheck ic = check_invariance(cfg.record.lagrangian, *cfg.record.action, cfg.samples, cfg.seed);
    summary["invariance_residual"] = ic.max_residual;
    summary["invariance_passed"] = ic.max_residual <= cfg.tol;
    if (ic.max_residual > cfg.tol) {
      err << "Lagrangian is not invariant: residual " << format_double(ic.max_residual) << "\n";
      ok = false;
    }
  }
  if (cfg.record.scenario) {
    const ScenarioData& sd = *cfg.record.scenario;
    const LagrangianInvariance li = lagrangian_invariance(sd.scenario, sd.unreduced, cfg.samples, cfg.seed);
    summary["unreduced_invariance_residual"] = li.max_residual;
    summary["unreduced_invariance_passed"] = li.max_residual <= cfg.tol;
    if (li.max_residual > cfg.tol) {
      err << "unreduced Lagrangian is not invariant: residual " << format_double(li.max_residual) << "\n";
      ok = false;
    }
  }
  summary["passed"] = ok;
  write_json(cfg, "check.json", summary);
  log << rep.to_text() << (ok ? "all checks passed\n" : "violations found\n");
  return ok ? kExitOk : kExitViolation;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  const Run run = with_failure_dump(cfg, "simulate", err, [&] { return integrate(cfg); });
  write_file_atomic(out_path(cfg, "trajectory.csv"), trajectory_csv(run.traj));
  if (run.rec) write_file_atomic(out_path(cfg, "group.csv"), group_csv(*run.rec));

  const double e0 = energy(cfg.record.lagrangian, run.traj.states.front());
  double drift = 0.0;
  for (const auto& s : run.traj.states) drift = std::max(drift, std::abs(energy(cfg.record.lagrangian, s) - e0));
  ojson rep = run_header(cfg, "simulate");
  rep["method"] = run.traj.method;
  rep["step"] = run.traj.step;
  rep["samples"] = run.traj.states.size();
  rep["t_start"] = run.traj.times.front();
  rep["t_end"] = run.traj.times.back();
  rep["energy_initial"] = e0;
  rep["energy_drift"] = drift;
  if (run.traj.states.size() >= 5) {
    rep["lp_residual_max"] = max_abs_of(trajectory_lp_residual(cfg.record.lagrangian, run.traj));
    ojson gens = ojson::array();
    for (const auto& eta : cfg.generators) {
      const CurrentSeries cs = current_series(cfg, run, eta);
      double res = 0.0;
      for (size_t i = 0; i < cs.dJdt.size(); ++i) res = std::max(res, std::abs(cs.dJdt[i] - cs.rhs[i]));
      ojson g;
      g["generator"] = to_list(eta);
      g["max_abs_dJdt"] = max_abs_of(cs.dJdt);
      g["max_abs_residual"] = res;
      gens.push_back(g);
    }
    rep["noether"] = gens;
  }
  rep["final"] = state_json(run.traj.states.back());
  write_json(cfg, "report.json", rep);
  log << "simulated " << cfg.record.name << ": " << run.traj.states.size() << " samples, energy drift "
      << format_double(drift) << "\n";
  return kExitOk;
}

int cmd_reduce(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  const ScenarioData& sd = require_scenario(cfg, "reduce");
  const ReducedBundleHandle h = build_reduced_bundle(sd.scenario, cfg.samples, cfg.seed, cfg.tol);
  ojson dump;
  dump["scenario"] = sd.scenario.name;
  dump["group"] = sd.scenario.group.name();
  dump["base_dim"] = sd.scenario.d();
  dump["algebra_dim"] = h.algebra_dim();
  dump["rep_dim"] = h.rep_dim();
  dump["axioms"] = ojson::parse(h.report.to_json());
  // Structure functions at a few seeded base points.
  Rng rng(cfg.seed);
  ojson pts = ojson::array();
  const int n_points = sd.scenario.d() == 0 ? 1 : std::min(cfg.samples, 5);
  for (int i = 0; i < n_points; ++i) {
    const Eigen::VectorXd x = h.bundle.base.sample(rng);
    const Eigen::VectorXd xs = x;
    ojson p;
    p["x"] = to_list(x);
    p["gamma"] = to_list(eval(h.bundle.gamma, xs));
    p["bracket"] = to_list(eval(h.bundle.bracket, xs));
    p["omega"] = to_list(eval(h.bundle.omega, xs));
    p["curvature_form"] = to_list(curvature_form(sd.scenario, x));
    pts.push_back(p);
  }
  dump["structure_samples"] = pts;
  write_json(cfg, "reduced_bundle.json", dump);
  write_file_atomic(out_path(cfg, "formulas.txt"), h.formulas + "\n");

  const Run run = with_failure_dump(cfg, "reduce", err, [&] { return integrate(cfg); });
  write_file_atomic(out_path(cfg, "reduced_trajectory.csv"), trajectory_csv(run.traj));
  write_file_atomic(out_path(cfg, "group.csv"), group_csv(*run.rec));
  log << "reduced bundle of " << sd.scenario.name << " passes the axioms; " << run.traj.states.size()
      << " reduced samples written\n";
  return kExitOk;
}

int cmd_stages(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  const ScenarioData& sd = require_scenario(cfg, "stages");
  if (cfg.normal.empty()) throw ConfigError("config key 'stages.normal': no normal subalgebra given");
  StagesOptions opt;
  opt.compatible = cfg.compatible;
  opt.n_samples = cfg.samples;
  opt.seed = cfg.seed;
  opt.tol = cfg.tol;
  const StagesResult r = stages_reduce(sd.scenario, cfg.normal, sd.unreduced, opt);

  const LPState& s0 = cfg.record.initial;
  const Eigen::Index k = sd.scenario.k();
  LPState d0{s0.q, s0.qdot, s0.v.head(k)};
  LPState t0{Eigen::VectorXd(0), Eigen::VectorXd(0), r.beta * d0.v};
  const Trajectory direct = with_failure_dump(cfg, "stages", err, [&] {
    return integrate_lp(r.direct_lagrangian, d0, cfg.t_start, cfg.t_end, cfg.dt, cfg.method);
  });
  const Trajectory staged = with_failure_dump(cfg, "stages", err, [&] {
    return integrate_lp(r.staged_lagrangian, t0, cfg.t_start, cfg.t_end, cfg.dt, cfg.method);
  });
  double dev = 0.0;
  std::string csv = "t";
  for (Eigen::Index a = 0; a < k; ++a) csv += ",direct" + std::to_string(a + 1);
  for (Eigen::Index a = 0; a < k; ++a) csv += ",staged" + std::to_string(a + 1);
  csv += "\n";
  for (size_t i = 0; i < direct.states.size(); ++i) {
    const Eigen::VectorXd mapped = r.beta * direct.states[i].v;
    dev = std::max(dev, (mapped - staged.states[i].v).cwiseAbs().maxCoeff());
    std::vector<double> row = {direct.times[i]};
    for (double x : to_list(mapped)) row.push_back(x);
    for (double x : to_list(staged.states[i].v)) row.push_back(x);
    csv += csv_row(row);
  }
  write_file_atomic(out_path(cfg, "stages.csv"), csv);

  ojson rep = run_header(cfg, "stages");
  rep["normal"] = r.normal;
  rep["complement"] = r.complement;
  rep["compatible"] = r.compatible;
  rep["compatibility_residual"] = r.compatibility_residual;
  rep["structure_mismatch"] = r.structure_mismatch;
  rep["lagrangian_mismatch"] = r.lagrangian_mismatch;
  rep["max_trajectory_deviation"] = dev;
  rep["deviation_tol"] = cfg.stages_tol;
  std::vector<std::vector<double>> beta;
  for (Eigen::Index i = 0; i < r.beta.rows(); ++i) beta.push_back(to_list(r.beta.row(i).transpose()));
  rep["beta"] = beta;
  int code = kExitOk;
  if (!r.compatible) {
    err << "warning: connections are not compatible (residual " << format_double(r.compatibility_residual)
        << "); the deviation is reported without a verdict\n";
    rep["verdict"] = "not assessed";
  } else {
    const bool ok = dev <= cfg.stages_tol;
    rep["verdict"] = ok ? "pass" : "fail";
    if (!ok) {
      err << "direct and staged trajectories differ by " << format_double(dev) << "\n";
      code = kExitViolation;
    }
  }
  write_json(cfg, "stages.json", rep);
  log << "stages: max deviation " << format_double(dev) << ", structure mismatch "
      << format_double(r.structure_mismatch) << ", Lagrangian mismatch " << format_double(r.lagrangian_mismatch)
      << "\n";
  return code;
}

int cmd_noether(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  if (!cfg.record.action && !cfg.record.scenario) {
    throw ConfigError("noether needs a system with a declared symmetry");
  }
  if (cfg.generators.empty()) throw ConfigError("config key 'noether.generators': no generators given");
  const Run run = with_failure_dump(cfg, "noether", err, [&] { return integrate(cfg); });
  std::vector<CurrentSeries> series;
  for (const auto& eta : cfg.generators) series.push_back(current_series(cfg, run, eta));

  std::string csv = "t";
  for (size_t g = 0; g < series.size(); ++g) {
    const std::string s = std::to_string(g + 1);
    csv += ",J" + s + ",dJdt" + s + ",rhs" + s + ",residual" + s;
  }
  csv += "\n";
  ojson gens = ojson::array();
  for (size_t i = 0; i < series.front().times.size(); ++i) {
    std::vector<double> row = {series.front().times[i]};
    for (const auto& cs : series) {
      row.insert(row.end(), {cs.current[i], cs.dJdt[i], cs.rhs[i], cs.dJdt[i] - cs.rhs[i]});
    }
    csv += csv_row(row);
  }
  for (size_t g = 0; g < series.size(); ++g) {
    const CurrentSeries& cs = series[g];
    double res = 0.0;
    for (size_t i = 0; i < cs.dJdt.size(); ++i) res = std::max(res, std::abs(cs.dJdt[i] - cs.rhs[i]));
    ojson e;
    e["generator"] = to_list(cfg.generators[g]);
    e["max_abs_dJdt"] = max_abs_of(cs.dJdt);
    e["max_abs_residual"] = res;
    gens.push_back(e);
    log << "generator " << g + 1 << ": max |dJ/dt| " << format_double(max_abs_of(cs.dJdt)) << ", max residual "
        << format_double(res) << "\n";
  }
  write_file_atomic(out_path(cfg, "noether.csv"), csv);
  ojson rep = run_header(cfg, "noether");
  rep["generators"] = gens;
  write_json(cfg, "noether.json", rep);
  return kExitOk;
}

int run_command(const std::string& command, const CliOverrides& ov, std::ostream& log, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(ov);
    if (command == "check-axioms") return cmd_check_axioms(cfg, log, err);
    if (command == "simulate") return cmd_simulate(cfg, log, err);
    if (command == "reduce") return cmd_reduce(cfg, log, err);
    if (command == "stages") return cmd_stages(cfg, log, err);
    if (command == "noether") return cmd_noether(cfg, log, err);
    err << "error: unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionMismatch& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AxiomViolation& e) {
    err << "axiom violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const InvarianceViolation& e) {
    err << "invariance violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const NotNormal& e) {
    err << "not normal: " << e.what() << "\n";
    return kExitViolation;
  } catch (const SingularHessian& e) {
    err << "numerical failure (SingularHessian): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NoConvergence& e) {
    err << "numerical failure (NoConvergence): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ChartViolation& e) {
    err << "numerical failure (ChartViolation): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace lpmech
