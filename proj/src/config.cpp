#include <cstdlib>
#include <limits>
#include <set>

#include "json.hpp"
#include "lpmech/cli.hpp"
#include "lpmech/errors.hpp"
#include "lpmech/io.hpp"
#include "lpmech/polynomial.hpp"

namespace lpmech {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

std::string sub(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string idx(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(sub(path, it.key()), "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

/// null stands for an unbounded side.
double get_bound(const json& j, const std::string& path, double unbounded) {
  if (j.is_null()) return unbounded;
  return get_number(j, path);
}

long long get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long long>();
}

int get_dim(const json& j, const std::string& path) {
  const long long v = get_int(j, path);
  if (v < 0 || v > 64) fail(path, "dimension must lie in [0, 64]");
  return static_cast<int>(v);
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

/// size < 0 accepts any length.
Eigen::VectorXd get_vector(const json& j, const std::string& path, int size) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  if (size >= 0 && j.size() != static_cast<size_t>(size)) {
    fail(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_number(j[i], idx(path, i));
  return v;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& path, int rows, int cols) {
  if (!j.is_array() || j.size() != static_cast<size_t>(rows)) {
    fail(path, "expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = get_vector(j[static_cast<size_t>(r)], idx(path, r), cols).transpose();
  return m;
}

/// Sparse polynomial table: an array of terms {"out", "coef", "exps"}; "out"
/// may be omitted for scalar tables and "exps" for constants.
PolynomialTable get_table(const json& j, const std::string& path, int in_dim, int out_dim) {
  if (!j.is_array()) fail(path, "expected an array of polynomial terms");
  PolynomialTable t;
  t.in_dim = in_dim;
  t.outputs.assign(static_cast<size_t>(out_dim), {});
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string p = idx(path, i);
    check_keys(j[i], p, {"out", "coef", "exps"});
    long long out = 0;
    if (j[i].contains("out")) {
      out = get_int(j[i]["out"], sub(p, "out"));
    } else if (out_dim != 1) {
      fail(sub(p, "out"), "required for tables with more than one output");
    }
    if (out < 0 || out >= out_dim) fail(sub(p, "out"), "output index outside [0, " + std::to_string(out_dim) + ")");
    if (!j[i].contains("coef")) fail(sub(p, "coef"), "missing");
    Monomial mono;
    mono.coef = get_number(j[i]["coef"], sub(p, "coef"));
    mono.exps.assign(static_cast<size_t>(in_dim), 0);
    if (j[i].contains("exps")) {
      const json& e = j[i]["exps"];
      const std::string ep = sub(p, "exps");
      if (!e.is_array() || e.size() != static_cast<size_t>(in_dim)) {
        fail(ep, "expected " + std::to_string(in_dim) + " exponents");
      }
      for (size_t k = 0; k < e.size(); ++k) {
        const long long x = get_int(e[k], idx(ep, k));
        if (x < 0 || x > 16) fail(idx(ep, k), "exponent must lie in [0, 16]");
        mono.exps[k] = static_cast<int>(x);
      }
    }
    t.outputs[static_cast<size_t>(out)].push_back(std::move(mono));
  }
  return t;
}

SmoothMap table_or_zero(const json& parent, const std::string& key, const std::string& path, int in_dim,
                        int out_dim) {
  if (!parent.contains(key)) return constant_map(in_dim, Eigen::VectorXd::Zero(out_dim));
  return polynomial_map(get_table(parent[key], sub(path, key), in_dim, out_dim));
}

ChartDomain get_base(const json& j, const std::string& path) {
  check_keys(j, path, {"dim", "lower", "upper", "periodic"});
  if (!j.contains("dim")) fail(sub(path, "dim"), "missing");
  const int n = get_dim(j["dim"], sub(path, "dim"));
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(static_cast<size_t>(n), -inf), hi(static_cast<size_t>(n), inf);
  std::vector<bool> per(static_cast<size_t>(n), false);
  auto fill = [&](const char* key, std::vector<double>& out, double unbounded) {
    if (!j.contains(key)) return;
    const json& a = j[key];
    const std::string p = sub(path, key);
    if (!a.is_array() || a.size() != static_cast<size_t>(n)) fail(p, "expected " + std::to_string(n) + " entries");
    for (size_t i = 0; i < a.size(); ++i) out[i] = get_bound(a[i], idx(p, i), unbounded);
  };
  fill("lower", lo, -inf);
  fill("upper", hi, inf);
  if (j.contains("periodic")) {
    const json& a = j["periodic"];
    const std::string p = sub(path, "periodic");
    if (!a.is_array() || a.size() != static_cast<size_t>(n)) fail(p, "expected " + std::to_string(n) + " entries");
    for (size_t i = 0; i < a.size(); ++i) per[i] = get_bool(a[i], idx(p, i));
  }
  ChartDomain d = ChartDomain::box(lo, hi, per);
  try {
    d.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return d;
}

// ---- catalog parameters ----

SystemRecord catalog_record(const std::string& name, const json* params, const std::string& path) {
  static const json empty = json::object();
  const json& p = params ? *params : empty;
  auto has = [&](const char* k) { return p.contains(k); };
  if (name == "flat_bundle_particle") {
    check_keys(p, path, {"metric", "metric_bend", "fiber_metric", "holonomy", "period", "omega", "omega_strength"});
    FlatBundleParams fp;
    if (has("metric")) fp.metric = get_matrix(p["metric"], sub(path, "metric"), 2, 2);
    if (has("metric_bend")) fp.metric_bend = get_number(p["metric_bend"], sub(path, "metric_bend"));
    if (has("fiber_metric")) fp.fiber_metric = get_matrix(p["fiber_metric"], sub(path, "fiber_metric"), 2, 2);
    if (has("holonomy")) fp.holonomy = get_number(p["holonomy"], sub(path, "holonomy"));
    if (has("period")) fp.period = get_number(p["period"], sub(path, "period"));
    if (has("omega")) {
      const std::string w = get_string(p["omega"], sub(path, "omega"));
      if (w == "zero") {
        fp.omega = OmegaChoice::Zero;
      } else if (w == "closed") {
        fp.omega = OmegaChoice::Closed;
      } else {
        fail(sub(path, "omega"), "expected \"zero\" or \"closed\"");
      }
    }
    if (has("omega_strength")) fp.omega_strength = get_vector(p["omega_strength"], sub(path, "omega_strength"), 2);
    return flat_bundle_particle(fp);
  }
  if (name == "free_particle") {
    check_keys(p, path, {"dim"});
    int n = 2;
    if (has("dim")) n = get_dim(p["dim"], sub(path, "dim"));
    if (n < 1) fail(sub(path, "dim"), "must be positive");
    return free_particle(n);
  }
  if (name == "central_force_particle") {
    check_keys(p, path, {"stiffness", "quartic"});
    double k = 1.0, lam = 0.2;
    if (has("stiffness")) k = get_number(p["stiffness"], sub(path, "stiffness"));
    if (has("quartic")) lam = get_number(p["quartic"], sub(path, "quartic"));
    return central_force_particle(k, lam);
  }
  if (name == "rigid_body") {
    check_keys(p, path, {"inertia", "omega0"});
    RigidBodyParams rp;
    if (has("inertia")) rp.inertia = get_vector(p["inertia"], sub(path, "inertia"), 3);
    if (has("omega0")) rp.omega0 = get_vector(p["omega0"], sub(path, "omega0"), 3);
    return rigid_body(rp);
  }
  if (name == "heavy_top" || name == "parameter_lagrangian") {
    check_keys(p, path, {"inertia", "chi", "a0", "omega0", "b0"});
    HeavyTopParams hp;
    if (has("inertia")) hp.inertia = get_vector(p["inertia"], sub(path, "inertia"), 3);
    if (has("chi")) hp.chi = get_vector(p["chi"], sub(path, "chi"), 3);
    if (has("a0")) hp.a0 = get_vector(p["a0"], sub(path, "a0"), 3);
    if (has("omega0")) hp.omega0 = get_vector(p["omega0"], sub(path, "omega0"), 3);
    if (has("b0")) hp.b0 = get_vector(p["b0"], sub(path, "b0"), 3);
    return parameter_lagrangian(hp);
  }
  if (name == "heisenberg_stages") {
    check_keys(p, path, {"metric", "xi0"});
    HeisenbergParams hp;
    if (has("metric")) hp.metric = get_matrix(p["metric"], sub(path, "metric"), 3, 3);
    if (has("xi0")) hp.xi0 = get_vector(p["xi0"], sub(path, "xi0"), 3);
    return heisenberg_stages(hp);
  }
  std::string known;
  for (const auto& s : system_names()) known += (known.empty() ? "" : ", ") + s;
  fail("system", "unknown system '" + name + "' (known: " + known + ")");
}

// ---- inline definitions ----

SystemRecord inline_bundle(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "base", "fiber_dim", "gamma", "bracket", "omega", "lagrangian", "action"});
  if (!j.contains("base")) fail(sub(path, "base"), "missing");
  if (!j.contains("fiber_dim")) fail(sub(path, "fiber_dim"), "missing");
  if (!j.contains("lagrangian")) fail(sub(path, "lagrangian"), "missing");
  SystemRecord r;
  r.name = j.contains("name") ? get_string(j["name"], sub(path, "name")) : "inline_bundle";
  r.description = "bundle defined by polynomial tables in the config";
  LPBundleChart& b = r.lagrangian.bundle;
  b.name = r.name;
  b.base = get_base(j["base"], sub(path, "base"));
  b.m = get_dim(j["fiber_dim"], sub(path, "fiber_dim"));
  const int n = b.base.n, m = b.m;
  b.gamma = table_or_zero(j, "gamma", path, n, n * m * m);
  b.bracket = table_or_zero(j, "bracket", path, n, m * m * m);
  b.omega = table_or_zero(j, "omega", path, n, m * n * n);
  r.lagrangian.L = polynomial_map(get_table(j["lagrangian"], sub(path, "lagrangian"), 2 * n + m, 1));
  if (j.contains("action")) {
    const std::string ap = sub(path, "action");
    const json& a = j["action"];
    check_keys(a, ap, {"dim", "gen_q", "gen_v", "structure"});
    if (!a.contains("dim")) fail(sub(ap, "dim"), "missing");
    GroupAction act;
    act.dim = get_dim(a["dim"], sub(ap, "dim"));
    const int k = act.dim;
    act.genQ = table_or_zero(a, "gen_q", ap, k + n, n);
    act.genV = table_or_zero(a, "gen_v", ap, k + n + m, m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k * k * k);
    if (a.contains("structure")) c = get_vector(a["structure"], sub(ap, "structure"), k * k * k);
    act.structure.assign(c.data(), c.data() + c.size());
    r.action = std::move(act);
  }
  r.expected = {"user-defined"};
  return r;
}

SystemRecord inline_scenario(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "group", "group_dim", "base", "connection", "representation", "lagrangian", "g0",
                       "normal"});
  if (!j.contains("group")) fail(sub(path, "group"), "missing");
  if (!j.contains("lagrangian")) fail(sub(path, "lagrangian"), "missing");
  const std::string name = j.contains("name") ? get_string(j["name"], sub(path, "name")) : "inline_scenario";
  const int gk = j.contains("group_dim") ? get_dim(j["group_dim"], sub(path, "group_dim")) : 0;
  const std::string group_name = get_string(j["group"], sub(path, "group"));
  const MatrixLieGroup group = [&] {
    try {
      return MatrixLieGroup::by_name(group_name, gk);
    } catch (const Error& e) {
      fail(sub(path, "group"), e.what());
    }
  }();
  ChartDomain base = j.contains("base") ? get_base(j["base"], sub(path, "base")) : ChartDomain::euclidean(0);
  const int d = base.n, k = group.dim();
  SmoothMap conn = table_or_zero(j, "connection", path, d, d * k);
  const std::string rep =
      j.contains("representation") ? get_string(j["representation"], sub(path, "representation")) : "none";
  ScenarioData sd;
  try {
    sd.scenario = make_scenario(name, base, group, conn, rep);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  const int N = sd.scenario.msize();
  sd.unreduced = polynomial_map(get_table(j["lagrangian"], sub(path, "lagrangian"),
                                          unreduced_input_dim(sd.scenario), 1));
  sd.g0 = j.contains("g0") ? get_matrix(j["g0"], sub(path, "g0"), N, N) : group.identity();
  try {
    group.validate_element(sd.g0);
  } catch (const Error& e) {
    fail(sub(path, "g0"), e.what());
  }
  if (j.contains("normal")) {
    const json& a = j["normal"];
    if (!a.is_array()) fail(sub(path, "normal"), "expected an array of basis indices");
    for (size_t i = 0; i < a.size(); ++i) {
      const long long v = get_int(a[i], idx(sub(path, "normal"), i));
      if (v < 0 || v >= k) fail(idx(sub(path, "normal"), i), "basis index outside the algebra");
      sd.normal.push_back(static_cast<int>(v));
    }
  }
  SystemRecord r;
  r.name = name;
  r.description = "principal scenario defined in the config, reduced by its group";
  r.lagrangian = reduce_lagrangian(sd.scenario, sd.unreduced);
  r.initial = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(k + sd.scenario.w())};
  r.scenario = std::move(sd);
  r.expected = {"user-defined"};
  return r;
}

void apply_initial(SystemRecord& r, const json& j, const std::string& path) {
  check_keys(j, path, {"q", "qdot", "v"});
  const int n = r.lagrangian.bundle.n(), m = r.lagrangian.bundle.m;
  if (j.contains("q")) r.initial.q = get_vector(j["q"], sub(path, "q"), n);
  if (j.contains("qdot")) r.initial.qdot = get_vector(j["qdot"], sub(path, "qdot"), n);
  if (j.contains("v")) r.initial.v = get_vector(j["v"], sub(path, "v"), m);
  try {
    r.lagrangian.bundle.base.check(r.initial.q);
  } catch (const Error& e) {
    fail(sub(path, "q"), e.what());
  }
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to 1-based line and column.
    size_t line = 1, col = 1;
    const size_t end = std::min(static_cast<size_t>(e.byte), text.size() + 1);
    for (size_t i = 0; i + 1 < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + e.what());
  }
}

}  // namespace

std::uint64_t parse_seed(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos || text.size() > 19) {
    throw ConfigError("seed '" + text + "' is not a non-negative decimal integer");
  }
  return std::stoull(text);
}

RunConfig parse_config(const std::string& text, const CliOverrides& ov) {
  const json root = text.empty() ? json::object() : parse_json(text);
  check_keys(root, "", {"system", "params", "bundle", "scenario", "initial", "time", "method", "seed", "tol",
                        "samples", "noether", "stages", "output"});
  RunConfig cfg;

  const int sources = (root.contains("system") ? 1 : 0) + (root.contains("bundle") ? 1 : 0) +
                      (root.contains("scenario") ? 1 : 0);
  if (sources > 1) fail("system", "give exactly one of 'system', 'bundle', 'scenario'");
  std::string file_system = root.contains("system") ? get_string(root["system"], "system") : "";
  // A command-line system that differs from the file's replaces it, together with its params and initial state.
  const bool replaced = ov.system && *ov.system != file_system;
  try {
    if (replaced) {
      cfg.system = *ov.system;
      cfg.record = catalog_record(cfg.system, nullptr, "params");
    } else if (root.contains("bundle")) {
      cfg.system = "bundle";
      cfg.record = inline_bundle(root["bundle"], "bundle");
    } else if (root.contains("scenario")) {
      cfg.system = "scenario";
      cfg.record = inline_scenario(root["scenario"], "scenario");
    } else if (!file_system.empty()) {
      cfg.system = file_system;
      cfg.record = catalog_record(cfg.system, root.contains("params") ? &root["params"] : nullptr, "params");
    } else {
      fail("system", "missing; set 'system', 'bundle' or 'scenario', or pass --system");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid system parameters: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(std::string("inconsistent system dimensions: ") + e.what());
  }
  if (root.contains("params") && (root.contains("bundle") || root.contains("scenario"))) {
    fail("params", "only valid together with 'system'");
  }
  try {
    cfg.record.lagrangian.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("inconsistent system dimensions: ") + e.what());
  }
  if (root.contains("initial") && !replaced) apply_initial(cfg.record, root["initial"], "initial");

  if (root.contains("time")) {
    const json& t = root["time"];
    check_keys(t, "time", {"start", "end", "dt"});
    if (t.contains("start")) cfg.t_start = get_number(t["start"], "time.start");
    if (t.contains("end")) cfg.t_end = get_number(t["end"], "time.end");
    if (t.contains("dt")) cfg.dt = get_number(t["dt"], "time.dt");
  }
  if (ov.t_end) cfg.t_end = *ov.t_end;
  if (ov.dt) cfg.dt = *ov.dt;
  if (!(cfg.t_end > cfg.t_start)) fail("time.end", "must exceed time.start");
  if (!(cfg.dt > 0.0) || !(cfg.dt <= cfg.t_end - cfg.t_start)) fail("time.dt", "must lie in (0, end - start]");
  if ((cfg.t_end - cfg.t_start) / cfg.dt > 1e7) fail("time.dt", "more than 1e7 steps requested");

  std::string method = root.contains("method") ? get_string(root["method"], "method") : "rk4";
  if (ov.method) method = *ov.method;
  try {
    cfg.method = parse_method(method);
  } catch (const Error& e) {
    fail("method", e.what());
  }

  if (ov.seed) {
    cfg.seed = *ov.seed;
  } else if (root.contains("seed")) {
    const long long s = get_int(root["seed"], "seed");
    if (s < 0) fail("seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (ov.env_seed) {
    cfg.seed = parse_seed(*ov.env_seed);
  }

  if (root.contains("tol")) cfg.tol = get_number(root["tol"], "tol");
  if (ov.tol) cfg.tol = *ov.tol;
  if (!(cfg.tol > 0.0)) fail("tol", "must be positive");
  if (root.contains("samples")) {
    const long long s = get_int(root["samples"], "samples");
    if (s < 1 || s > 100000) fail("samples", "must lie in [1, 100000]");
    cfg.samples = static_cast<int>(s);
  }

  int gen_dim = 0;
  if (cfg.record.action) {
    gen_dim = cfg.record.action->dim;
  } else if (cfg.record.scenario) {
    gen_dim = cfg.record.scenario->scenario.k();
  }
  if (root.contains("noether")) {
    const json& nj = root["noether"];
    check_keys(nj, "noether", {"generators"});
    if (nj.contains("generators")) {
      const json& g = nj["generators"];
      if (!g.is_array()) fail("noether.generators", "expected an array of vectors");
      for (size_t i = 0; i < g.size(); ++i) {
        cfg.generators.push_back(get_vector(g[i], idx("noether.generators", i), gen_dim));
      }
    }
  }
  if (cfg.generators.empty()) {
    for (int a = 0; a < gen_dim; ++a) cfg.generators.push_back(Eigen::VectorXd::Unit(gen_dim, a));
  }

  if (cfg.record.scenario) cfg.normal = cfg.record.scenario->normal;
  if (root.contains("stages")) {
    const json& sj = root["stages"];
    check_keys(sj, "stages", {"normal", "compatible", "tol"});
    if (sj.contains("normal")) {
      const json& a = sj["normal"];
      if (!a.is_array()) fail("stages.normal", "expected an array of basis indices");
      cfg.normal.clear();
      for (size_t i = 0; i < a.size(); ++i) {
        const long long v = get_int(a[i], idx("stages.normal", i));
        if (v < 0 || v >= gen_dim) fail(idx("stages.normal", i), "basis index outside the algebra");
        cfg.normal.push_back(static_cast<int>(v));
      }
    }
    if (sj.contains("compatible")) cfg.compatible = get_bool(sj["compatible"], "stages.compatible");
    if (sj.contains("tol")) cfg.stages_tol = get_number(sj["tol"], "stages.tol");
    if (!(cfg.stages_tol > 0.0)) fail("stages.tol", "must be positive");
  }

  if (root.contains("output")) {
    const json& oj = root["output"];
    check_keys(oj, "output", {"dir"});
    if (oj.contains("dir")) cfg.out_dir = get_string(oj["dir"], "output.dir");
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (cfg.out_dir.empty()) fail("output.dir", "must not be empty");
  return cfg;
}

RunConfig load_config(const CliOverrides& ov) {
  std::string text;
  if (ov.config_path) {
    try {
      text = read_file(*ov.config_path);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (text.empty()) throw ConfigError("config file " + *ov.config_path + " is empty");
  } else if (!ov.system) {
    throw ConfigError("either --config or --system is required");
  }
  return parse_config(text, ov);
}

}  // namespace lpmech
