#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lpmech/dynamics.hpp"
#include "lpmech/liegroups.hpp"
#include "lpmech/lpbundle.hpp"

namespace lpmech {

/// Trivialized principal bundle Q = B x G with G acting on itself from the left,
/// plus an auxiliary V = B x G x W on which G acts through a representation.
/// Upstairs Gamma, omega and the W-bracket vanish.
///
/// The connection is given by its local form A: x -> A_i^gamma at index i*k + gamma.
/// Horizontal vectors satisfy g^{-1} gdot = A(x) xdot, so the body-frame
/// connection value is xi = g^{-1} gdot - A(x) xdot.
struct PrincipalScenario {
  std::string name;
  ChartDomain base;
  MatrixLieGroup group;
  SmoothMap connection;
  /// dim 0 when there is no W.
  Representation rep;

  int d() const { return base.n; }
  int k() const { return group.dim(); }
  int w() const { return rep.dim; }
  /// Matrix size of the group, N; group elements enter Lagrangians as N*N row-major blocks.
  int msize() const { return group.matrix_size(); }

  /// Throws DimensionMismatch on shape errors and InvalidArgument when the
  /// representation generators fail to close under the algebra bracket at 1e-10.
  void validate() const;
};

/// Scenario with default pieces: an empty connection becomes A = 0; rep "none" means no W.
PrincipalScenario make_scenario(std::string name, ChartDomain base, MatrixLieGroup group, SmoothMap connection = {},
                                const std::string& rep = "none");

SmoothMap zero_connection(int d, int k);
/// A_i^gamma(x) = offset[i*k + gamma] + sum_j slope(i*k + gamma, j) x^j.
SmoothMap affine_connection(int d, int k, const Eigen::VectorXd& offset, const Eigen::MatrixXd& slope);

/// B^gamma_{ij} = d_i A_j - d_j A_i + [A_i, A_j] at (gamma*d + i)*d + j.
Eigen::VectorXd curvature_form(const PrincipalScenario& sc, const Eigen::VectorXd& x);

/// Structure maps of the quotient bundle T B (+) (g (+) W) over B:
///   Gamma on the algebra block: c^a_{gb} A_i^g; on the W block: rho'(A_i)
///   omega = -B on the algebra block, 0 on W
///   bracket: [xi1, xi2] (+) (rho'(xi1) w2 - rho'(xi2) w1)
LPBundleChart reduced_bundle_chart(const PrincipalScenario& sc);

struct ReducedBundleHandle {
  LPBundleChart bundle;
  PrincipalScenario scenario;
  AxiomReport report;
  std::string formulas;
  int algebra_dim() const { return scenario.k(); }
  int rep_dim() const { return scenario.w(); }
};

/// Builds the quotient bundle and runs check_axioms on it; throws
/// AxiomViolation when any condition fails, which signals a convention bug.
ReducedBundleHandle build_reduced_bundle(const PrincipalScenario& sc, int n_samples = 100, std::uint64_t seed = 1,
                                         double tol = 1e-8);

/// Point of T Q (+) V in the trivialization.
struct UnreducedPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd xdot;
  Eigen::MatrixXd g;
  Eigen::MatrixXd gdot;
  Eigen::VectorXd w;
};

/// (x, xdot, g, gdot, w) -> (x, xdot, xi (+) a) with xi = g^{-1} gdot - A(x) xdot, a = rho(g^{-1}) w.
LPState alpha_map(const PrincipalScenario& sc, const UnreducedPoint& p);

/// Inverse of alpha_map over a fixed group element g.
UnreducedPoint alpha_inverse(const PrincipalScenario& sc, const LPState& reduced, const Eigen::MatrixXd& g);

/// Input length of an unreduced Lagrangian: (x, xdot, vec g, vec gdot, w), 2d + 2N^2 + dim W.
int unreduced_input_dim(const PrincipalScenario& sc);

/// Largest |L(p) - L(g^{-1} p)| / (1 + |L(p)|) over random unreduced points.
struct LagrangianInvariance {
  double max_residual = 0.0;
  UnreducedPoint worst;
};
LagrangianInvariance lagrangian_invariance(const PrincipalScenario& sc, const SmoothMap& L, int n_samples,
                                           std::uint64_t seed);

/// L^G(x, xdot, xi (+) a) = L(x, xdot, e, hat(xi + A xdot), a). Throws
/// InvarianceViolation when lagrangian_invariance exceeds tol.
LPLagrangian reduce_lagrangian(const PrincipalScenario& sc, const SmoothMap& L, int n_samples = 50,
                               std::uint64_t seed = 7, double tol = 1e-10);

// ---- unreduced side in the exponential chart ----

/// LP system on B x (chart of G around e) with trivial fiber W; g = exp(theta).
/// For SO(3) the theta box is [-pi/2, pi/2]^3, so no re-centering is needed for
/// the short time spans used here; leaving it raises ChartViolation.
LPLagrangian exp_chart_system(const PrincipalScenario& sc, const SmoothMap& L);

/// Left multiplication on the group factor and rho on W, in chart coordinates.
GroupAction exp_chart_action(const PrincipalScenario& sc);

/// Chart state (x, theta; xdot, thetadot; w) -> trivialized point.
UnreducedPoint chart_to_point(const PrincipalScenario& sc, const LPState& chart_state);
/// Trivialized point with g inside the chart -> chart state.
LPState point_to_chart(const PrincipalScenario& sc, const UnreducedPoint& p);

struct GroupTrajectory {
  std::vector<double> times;
  std::vector<UnreducedPoint> points;
};

GroupTrajectory chart_to_group(const PrincipalScenario& sc, const Trajectory& chart_traj);

/// Pointwise alpha_map; the time grid is preserved.
Trajectory project_trajectory(const PrincipalScenario& sc, const GroupTrajectory& traj);

/// Reduced flow together with the reconstruction equation gdot = g hat(xi + A(x) xdot),
/// integrated as one system with the step rules of integrate_lp.
struct Reconstruction {
  Trajectory reduced;
  std::vector<Eigen::MatrixXd> g;
};
Reconstruction integrate_reconstructed(const PrincipalScenario& sc, const LPLagrangian& reduced,
                                       const LPState& s0, const Eigen::MatrixXd& g0, double t0, double t1,
                                       double h, Method method = Method::RK4);

// ---- advected parameters and Noether split ----

/// (b <> a)_alpha = <a, rho'(e_alpha) b>, equivalently <b <> a, eta> = -<rho*'(eta) a, b>.
Eigen::VectorXd diamond(const Representation& rep, const Eigen::VectorXd& b, const Eigen::VectorXd& a);

/// Algebra block and W block of the vertical LP covector of a reduced system:
///   new_vertical_a = c^g_{ba} xi^b mu_g - (d/dt mu_a - mu_b c^b_{ga} A^g(xdot)) - <mu_W, rho'(e_a) w>
///   inherited_r    = <mu_W, rho'(xi) e_r> - (d/dt mu_W - mu_W rho'(A(xdot)))_r
/// Their concatenation is the fiber part of lp_operator.
struct VerticalSplit {
  Eigen::VectorXd new_vertical;
  Eigen::VectorXd inherited;
};
VerticalSplit reduced_vertical_split(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState2& s2);

/// j = <dL^G/dxi, eta_bar>.
double reduced_noether(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState& s,
                       const Eigen::VectorXd& eta_bar);

/// Drift of j along a solution for eta_bar(t) = Ad_{g(t)^{-1}} eta: -<mu_W, rho'(eta_bar) w>.
/// The omega coupling vanishes because upstairs omega is zero.
double reduced_noether_drift_rhs(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState& s,
                                 const Eigen::VectorXd& eta_bar);

/// Body representative Ad_{g^{-1}} eta of a spatial algebra element.
Eigen::VectorXd body_of_spatial(const MatrixLieGroup& group, const Eigen::MatrixXd& g, const Eigen::VectorXd& eta);

// ---- reduction by stages ----

struct StagesOptions {
  /// false replaces the normal-subgroup connection by zero, which breaks compatibility.
  bool compatible = true;
  int n_samples = 100;
  std::uint64_t seed = 11;
  double tol = 1e-8;
};

/// Reduction of Q = G (point base, no W) by a central subgroup N spanned by basis
/// vectors `normal`, then by K = G/N, compared with direct reduction by G.
/// The complement s (remaining basis vectors) must satisfy [s, s] in n, so K is abelian.
struct StagesResult {
  std::vector<int> normal;
  std::vector<int> complement;
  ReducedBundleHandle direct;
  LPLagrangian direct_lagrangian;
  PrincipalScenario stage1_scenario;
  ReducedBundleHandle stage1;
  LPLagrangian stage1_lagrangian;
  LPBundleChart stage2;
  AxiomReport stage2_report;
  LPLagrangian staged_lagrangian;
  /// Linear map from direct fiber coordinates to staged (k (+) n) coordinates.
  Eigen::MatrixXd beta;
  /// max |c_staged(beta x, beta y) - beta c_direct(x, y)| over basis pairs.
  double structure_mismatch = 0.0;
  /// max |L_staged(beta xi) - L_direct(xi)| over random fiber points.
  double lagrangian_mismatch = 0.0;
  /// Largest K-translation invariance defect of the stage-one Lagrangian;
  /// nonzero only for incompatible connections.
  double compatibility_residual = 0.0;
  bool compatible = true;
};

/// Throws NotNormal when ad(g) n is not inside n at 1e-12, InvalidArgument when N
/// is not central, K not abelian, the base not a point or W present; and
/// AxiomViolation when a stage bundle fails check_axioms.
StagesResult stages_reduce(const PrincipalScenario& sc, const std::vector<int>& normal, const SmoothMap& L,
                           const StagesOptions& opt = {});

}  // namespace lpmech
