#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "lpmech/dynamics.hpp"
#include "lpmech/reduction.hpp"

namespace lpmech {

/// Unreduced origin of a system obtained by reduction.
struct ScenarioData {
  PrincipalScenario scenario;
  /// Invariant Lagrangian on (x, xdot, vec g, vec gdot, w).
  SmoothMap unreduced;
  /// Group element paired with the record's initial state for reconstruction.
  Eigen::MatrixXd g0;
  /// Basis indices of a central subalgebra for reduction by stages; empty if none.
  std::vector<int> normal;
};

/// Ready-made system: Lagrangian on an LP bundle, optional symmetry, a
/// representative initial state and the properties it is expected to show.
/// For reduced systems `lagrangian` is the reduced one and `scenario` holds the
/// unreduced data it came from.
struct SystemRecord {
  std::string name;
  std::string description;
  LPLagrangian lagrangian;
  std::optional<GroupAction> action;
  LPState initial;
  std::vector<std::string> expected;
  std::optional<ScenarioData> scenario;
};

enum class OmegaChoice { Zero, Closed };

/// Particle on a cylinder (q1 periodic with the given period, q2 free) with
/// an m = 2 fiber carrying a flat connection of rotation holonomy.
///   Gamma_1 = -(holonomy / period) J, Gamma_2 = 0, J = [[0,-1],[1,0]]
///   g(q) = metric * (1 + metric_bend * q2^2), h = fiber_metric
///   omega^a_{12} = omega_strength[a] * (1 + 0.25 q2^2), bracket = 0
///   L = g(qdot, qdot) + h(v, v)
/// h(v, v) is conserved exactly when h commutes with J (h a multiple of I).
/// The symmetry is translation of q1 with v fixed in coordinates.
struct FlatBundleParams {
  Eigen::Matrix2d metric = Eigen::Matrix2d::Identity();
  double metric_bend = 0.3;
  Eigen::Matrix2d fiber_metric = Eigen::Matrix2d::Identity();
  double holonomy = 1.5707963267948966;
  double period = 6.283185307179586;
  OmegaChoice omega = OmegaChoice::Closed;
  Eigen::Vector2d omega_strength = Eigen::Vector2d(0.4, -0.3);
};

SystemRecord flat_bundle_particle(const FlatBundleParams& params = {});

/// L = 1/2 |qdot|^2 on R^n with m = 0; translations as symmetry.
SystemRecord free_particle(int n = 2);

/// Planar particle, L = 1/2 |qdot|^2 - (1/2 k r^2 + 1/4 lambda r^4); rotations as symmetry.
SystemRecord central_force_particle(double stiffness = 1.0, double quartic = 0.2);

/// Free rigid body: B a point, G = SO(3), L = 1/2 <I Omega, Omega> with Omega = g^{-1} gdot;
/// the reduced system on so(3) carries the Euler equations.
struct RigidBodyParams {
  Eigen::Vector3d inertia = Eigen::Vector3d(1.0, 2.0, 3.0);
  Eigen::Vector3d omega0 = Eigen::Vector3d(0.3, 1.0, 0.2);
};
SystemRecord rigid_body(const RigidBodyParams& params = {});

/// Heavy top with advected parameter: G = SO(3), W = V* (+) V with V = R^3.
///   unreduced L = 1/2 <I Omega, Omega> - <g^T a0, chi> + <a0, b0>
///   reduced   l = 1/2 <I xi, xi> - <a, chi> + <a, b>
/// a(t) = g(t)^T a0 is the advected gravity direction in the body frame.
struct HeavyTopParams {
  Eigen::Vector3d inertia = Eigen::Vector3d(1.0, 1.3, 0.7);
  Eigen::Vector3d chi = Eigen::Vector3d(0.1, -0.2, 0.5);
  Eigen::Vector3d a0 = Eigen::Vector3d(0.0, 0.0, 1.0);
  Eigen::Vector3d omega0 = Eigen::Vector3d(0.4, -0.2, 1.5);
  Eigen::Vector3d b0 = Eigen::Vector3d::Zero();
};
SystemRecord parameter_lagrangian(const HeavyTopParams& params = {});

/// Left-invariant quadratic Lagrangian 1/2 xi^T M xi on the Heisenberg group with
/// the center marked for reduction by stages.
struct HeisenbergParams {
  Eigen::Matrix3d metric = (Eigen::Matrix3d() << 1.0, 0.2, 0.1, 0.2, 1.5, 0.3, 0.1, 0.3, 0.8).finished();
  Eigen::Vector3d xi0 = Eigen::Vector3d(0.6, -0.4, 0.9);
};
SystemRecord heisenberg_stages(const HeisenbergParams& params = {});

std::vector<std::string> system_names();
/// Catalog entry with default parameters; throws InvalidArgument for unknown names.
SystemRecord system_by_name(const std::string& name);

}  // namespace lpmech
