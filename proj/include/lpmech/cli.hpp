#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lpmech/dynamics.hpp"
#include "lpmech/systems.hpp"

namespace lpmech {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitViolation = 2, kExitNumerical = 3 };

/// Values given on the command line; each one overrides the config file.
struct CliOverrides {
  std::optional<std::string> config_path;
  std::optional<std::string> system;
  std::optional<double> t_end;
  std::optional<double> dt;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::string> out_dir;
  /// Value of LPMECH_SEED, used when neither the flag nor the config sets a seed.
  std::optional<std::string> env_seed;
};

/// Fully validated run description. `record` is built before any command runs,
/// so every schema and shape error surfaces as ConfigError first.
struct RunConfig {
  std::string system;
  SystemRecord record;
  double t_start = 0.0;
  double t_end = 1.0;
  double dt = 1e-3;
  Method method = Method::RK4;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  int samples = 100;
  /// Noether generators, each of length action dim (or algebra dim for reduced systems).
  std::vector<Eigen::VectorXd> generators;
  /// Basis indices of the normal subalgebra for `stages`.
  std::vector<int> normal;
  bool compatible = true;
  /// Pass bound on the direct vs staged trajectory deviation.
  double stages_tol = 1e-6;
  std::string out_dir = "lpmech_out";
};

/// Parses a JSON config document and applies overrides. Throws ConfigError
/// naming the offending key path, or the line and column of a syntax error.
RunConfig parse_config(const std::string& text, const CliOverrides& ov);

/// Reads `ov.config_path` when present; otherwise builds the config from
/// overrides alone, which then must name a system.
RunConfig load_config(const CliOverrides& ov);

/// Seed from a decimal string; throws ConfigError on anything else.
std::uint64_t parse_seed(const std::string& text);

/// Commands write their files under cfg.out_dir and return an ExitCode.
/// Summaries go to `log`, warnings and failure diagnostics to `err`.
int cmd_check_axioms(const RunConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_reduce(const RunConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_stages(const RunConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_noether(const RunConfig& cfg, std::ostream& log, std::ostream& err);

std::vector<std::string> command_names();

/// Loads the config and dispatches; maps library exceptions to exit codes:
/// ConfigError, InvalidArgument, DimensionMismatch -> 1;
/// AxiomViolation, InvarianceViolation, NotNormal -> 2;
/// SingularHessian, NoConvergence, ChartViolation -> 3.
int run_command(const std::string& command, const CliOverrides& ov, std::ostream& log, std::ostream& err);

}  // namespace lpmech
