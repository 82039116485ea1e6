#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lpmech/lpbundle.hpp"

namespace lpmech {

/// Lagrangian L(q, qdot, v) on an LP bundle; input layout (q, qdot, v), n + n + m.
/// Derivative level >= 2 is needed for dynamics.
struct LPLagrangian {
  LPBundleChart bundle;
  SmoothMap L;

  void validate() const;
};

struct LPState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::VectorXd v;
};

struct LPState2 {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::VectorXd qddot;
  Eigen::VectorXd v;
  Eigen::VectorXd vdot;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<LPState> states;
  std::string method;
  double step = 0.0;
  std::uint64_t seed = 0;
};

/// Infinitesimal symmetry: genQ(eta, q) = eta^Q(q), genV(eta, q, v) = coordinate
/// velocity of v under the action. Both linear in eta.
struct GroupAction {
  int dim = 0;
  SmoothMap genQ;  // (eta, q) -> R^n
  SmoothMap genV;  // (eta, q, v) -> R^m
  Vec<double> structure;
};

/// Base and fiber parts of the LP operator.
struct LPCovector {
  Eigen::VectorXd base;
  Eigen::VectorXd fiber;
  double norm() const { return std::sqrt(base.squaredNorm() + fiber.squaredNorm()); }
};

/// Partial derivatives of L at a first-order state, plus its Hessian.
struct LagrangianJet {
  double value = 0.0;
  Eigen::VectorXd Lq, p, mu;  // dL/dq, dL/dqdot, dL/dv
  Eigen::MatrixXd hess;       // (2n + m) square, layout (q, qdot, v)
};

LagrangianJet lagrangian_jet(const LPLagrangian& sys, const LPState& s);

Eigen::VectorXd pack(const LPState& s);

/// base_i = dL/dq^i - mu_a Gamma^a_{ib} v^b - d/dt(dL/dqdot^i) + mu_a omega^a_{ij} qdot^j
/// fiber_a = c^g_{ba} v^b mu_g - (d/dt mu_a - mu_b Gamma^b_{ia} qdot^i)
/// The mu Gamma v term turns the coordinate q-partial into the derivative along
/// parallel transport of v; the TQ part uses the flat chart connection.
LPCovector lp_operator(const LPLagrangian& sys, const LPState2& s2);

/// Unique (qddot, vdot) annihilating the LP operator. Throws SingularHessian
/// when the (qdot, v) Hessian block has condition number above 1e12.
std::pair<Eigen::VectorXd, Eigen::VectorXd> accelerations(const LPLagrangian& sys, const LPState& s);

enum class Method { RK4, Euler };
Method parse_method(const std::string& name);
std::string method_name(Method m);

/// Fixed-step integration of (q, qdot, v) on [t0, t1]; the step is shrunk so
/// an integer number of steps lands on t1. Periodic coordinates are wrapped
/// after every step; leaving a non-periodic interval throws ChartViolation.
Trajectory integrate_lp(const LPLagrangian& sys, const LPState& s0, double t0, double t1, double h,
                        Method method = Method::RK4);

/// E = <dL/dqdot, qdot> + <dL/dv, v> - L.
double energy(const LPLagrangian& sys, const LPState& s);

/// J = <dL/dqdot, eta^Q(q)>.
double noether_current(const LPLagrangian& sys, const GroupAction& act, const LPState& s, const Eigen::VectorXd& eta);

/// Connection-split vertical generator rho'(eta) v + Gamma(eta^Q) v.
Eigen::VectorXd vertical_generator(const LPLagrangian& sys, const GroupAction& act, const LPState& s,
                                   const Eigen::VectorXd& eta);

/// Right side of the current's evolution: dJ/dt = -<mu, omega(qdot, eta^Q) + vertical_generator>.
double noether_drift_rhs(const LPLagrangian& sys, const GroupAction& act, const LPState& s, const Eigen::VectorXd& eta);

struct NoetherSeries {
  std::vector<double> times;     // interior grid points
  std::vector<double> current;   // J at those points
  std::vector<double> dJdt;      // five-point central difference
  std::vector<double> residual;  // dJdt - drift_rhs
  double max_abs_residual() const;
  double max_abs_dJdt() const;
};

/// Needs a uniform grid with at least five points.
NoetherSeries noether_drift_residual(const LPLagrangian& sys, const GroupAction& act, const Trajectory& traj,
                                     const Eigen::VectorXd& eta);

/// Derivative of L along the generator: L_q eta^Q + L_qdot (D eta^Q) qdot + L_v genV.
double invariance_residual(const LPLagrangian& sys, const GroupAction& act, const LPState& s,
                           const Eigen::VectorXd& eta);

/// Largest |invariance_residual| over random states and unit generators.
struct InvarianceCheck {
  double max_residual = 0.0;
  LPState worst;
  int worst_generator = -1;
};
InvarianceCheck check_invariance(const LPLagrangian& sys, const GroupAction& act, int n_samples, std::uint64_t seed);

/// State with q from the chart sampler and Gaussian qdot, v scaled by `scale`.
LPState random_state(const LPLagrangian& sys, Rng& rng, double scale = 1.0);

/// LP operator along a trajectory with qddot, vdot from five-point differences;
/// the first and last two samples are skipped.
std::vector<double> trajectory_lp_residual(const LPLagrangian& sys, const Trajectory& traj);

std::string trajectory_csv(const Trajectory& traj);

}  // namespace lpmech
