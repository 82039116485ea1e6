#include "lpmech/liegroups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lpmech {

namespace {

Eigen::MatrixXd unit(int n, int r, int c) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m(r, c) = 1.0;
  return m;
}

Eigen::Matrix3d skew3(const Eigen::Vector3d& w) {
  Eigen::Matrix3d k;
  k << 0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0;
  return k;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

// ---------------- Representation ----------------

Eigen::MatrixXd Representation::action(const Eigen::MatrixXd& g) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(dim, dim);
  if (block_is_dual.empty()) return out;
  const Eigen::MatrixXd inv_t = g.inverse().transpose();
  int off = 0;
  for (bool dual : block_is_dual) {
    out.block(off, off, block_size, block_size) = dual ? inv_t : g;
    off += block_size;
  }
  return out;
}

Eigen::MatrixXd Representation::derivative(const Eigen::VectorXd& xi) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  for (size_t a = 0; a < generators.size(); ++a) out += xi[static_cast<Eigen::Index>(a)] * generators[a];
  return out;
}

// ---------------- MatrixLieGroup ----------------

MatrixLieGroup MatrixLieGroup::so3() {
  MatrixLieGroup g;
  g.name_ = "so3";
  g.kind_ = GroupKind::SO3;
  g.msize_ = 3;
  g.dim_ = 3;
  for (int a = 0; a < 3; ++a) g.basis_.push_back(skew3(Eigen::Vector3d::Unit(a)));
  g.finalize();
  return g;
}

MatrixLieGroup MatrixLieGroup::heisenberg() {
  MatrixLieGroup g;
  g.name_ = "heisenberg";
  g.kind_ = GroupKind::Heisenberg;
  g.msize_ = 3;
  g.dim_ = 3;
  g.basis_ = {unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)};
  g.finalize();
  return g;
}

MatrixLieGroup MatrixLieGroup::abelian(int k, bool periodic) {
  if (k < 0) throw InvalidArgument("abelian group: negative dimension");
  MatrixLieGroup g;
  g.name_ = periodic ? "torus" : "abelian";
  g.kind_ = GroupKind::Abelian;
  g.msize_ = k + 1;
  g.dim_ = k;
  g.periodic_ = periodic;
  for (int a = 0; a < k; ++a) g.basis_.push_back(unit(k + 1, a, k));
  g.finalize();
  return g;
}

MatrixLieGroup MatrixLieGroup::by_name(const std::string& name, int k) {
  if (name == "so3" || name == "SO3") return so3();
  if (name == "heisenberg" || name == "H3") return heisenberg();
  if (name == "abelian") return abelian(k, false);
  if (name == "torus") return abelian(k, true);
  throw InvalidArgument("unknown group '" + name + "'");
}

void MatrixLieGroup::finalize() { structure_ = structure_constants(*this); }

double MatrixLieGroup::injectivity_bound() const {
  switch (kind_) {
    case GroupKind::SO3:
      return kPi;
    case GroupKind::Heisenberg:
      return std::numeric_limits<double>::infinity();
    case GroupKind::Abelian:
      return periodic_ ? kPi : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

Eigen::MatrixXd MatrixLieGroup::hat(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim_) throw DimensionMismatch("hat: algebra vector length mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(msize_, msize_);
  for (int a = 0; a < dim_; ++a) m += xi[a] * basis_[a];
  return m;
}

Eigen::VectorXd MatrixLieGroup::vee(const Eigen::MatrixXd& m) const {
  if (m.rows() != msize_ || m.cols() != msize_) throw DimensionMismatch("vee: matrix size mismatch");
  // Basis matrices are Frobenius-orthogonal with equal norms within each group.
  Eigen::VectorXd xi(dim_);
  for (int a = 0; a < dim_; ++a) xi[a] = (basis_[a].array() * m.array()).sum() / basis_[a].squaredNorm();
  return xi;
}

Eigen::MatrixXd MatrixLieGroup::exp(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim_) throw DimensionMismatch("exp: algebra vector length mismatch");
  Vec<double> flat = exp_t(to_vec(xi));
  Eigen::MatrixXd g(msize_, msize_);
  for (int i = 0; i < msize_; ++i) {
    for (int j = 0; j < msize_; ++j) g(i, j) = flat[static_cast<size_t>(i) * msize_ + j];
  }
  return g;
}

Eigen::VectorXd MatrixLieGroup::log(const Eigen::MatrixXd& g) const {
  validate_element(g);
  Eigen::VectorXd xi(dim_);
  switch (kind_) {
    case GroupKind::SO3: {
      const double c = std::clamp((g.trace() - 1.0) * 0.5, -1.0, 1.0);
      const double r = std::acos(c);
      Eigen::Vector3d axis(g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1));
      if (r < 1e-6) {
        // sin r / r ~ 1 - r^2/6
        xi = 0.5 * axis / (1.0 - r * r / 6.0);
      } else if (kPi - r < 1e-6) {
        // Near the cut locus the antisymmetric part vanishes; use the symmetric part.
        Eigen::Matrix3d s = 0.5 * (g.topLeftCorner<3, 3>() + Eigen::Matrix3d::Identity());
        int best = 0;
        for (int a = 1; a < 3; ++a) {
          if (s(a, a) > s(best, best)) best = a;
        }
        Eigen::Vector3d u = s.col(best) / std::sqrt(std::max(s(best, best), 1e-300));
        if (u.dot(axis) < 0.0) u = -u;
        xi = r * u;
      } else {
        xi = (r / (2.0 * std::sin(r))) * axis;
      }
      break;
    }
    case GroupKind::Heisenberg:
      xi << g(0, 1), g(1, 2), g(0, 2) - 0.5 * g(0, 1) * g(1, 2);
      break;
    case GroupKind::Abelian:
      for (int a = 0; a < dim_; ++a) {
        double t = g(a, dim_);
        if (periodic_) t = std::remainder(t, 2.0 * kPi);
        xi[a] = t;
      }
      break;
  }
  return xi;
}

void MatrixLieGroup::validate_element(const Eigen::MatrixXd& g) const {
  if (g.rows() != msize_ || g.cols() != msize_) throw DimensionMismatch("group element: matrix size mismatch");
  if (!g.allFinite()) throw InvalidArgument("group element: non-finite entries");
  double residual = 0.0;
  switch (kind_) {
    case GroupKind::SO3: {
      residual = (g.transpose() * g - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff();
      residual = std::max(residual, std::abs(g.determinant() - 1.0));
      break;
    }
    case GroupKind::Heisenberg:
    case GroupKind::Abelian: {
      Eigen::MatrixXd pattern = g - identity();
      for (int a = 0; a < dim_; ++a) {
        const Eigen::MatrixXd& e = basis_[a];
        for (int i = 0; i < msize_; ++i) {
          for (int j = 0; j < msize_; ++j) {
            if (e(i, j) != 0.0) pattern(i, j) = 0.0;
          }
        }
      }
      residual = pattern.cwiseAbs().maxCoeff();
      break;
    }
  }
  if (residual > 1e-8) {
    throw InvalidArgument(name_ + ": not a group element (residual " + std::to_string(residual) + ")");
  }
}

std::vector<std::string> MatrixLieGroup::representation_names() const {
  if (kind_ == GroupKind::SO3) return {"trivial", "vector", "dual", "dual_plus_vector"};
  return {"trivial"};
}

Representation MatrixLieGroup::representation(const std::string& rep_name) const {
  Representation r;
  r.name = rep_name;
  if (rep_name == "none") return r;
  if (rep_name == "trivial") {
    r.dim = 1;
    r.generators.assign(dim_, Eigen::MatrixXd::Zero(1, 1));
    return r;
  }
  if (kind_ != GroupKind::SO3) {
    throw InvalidArgument("representation '" + rep_name + "' unavailable for group " + name_);
  }
  std::vector<bool> blocks;
  if (rep_name == "vector") {
    blocks = {false};
  } else if (rep_name == "dual") {
    blocks = {true};
  } else if (rep_name == "dual_plus_vector") {
    blocks = {true, false};
  } else {
    throw InvalidArgument("unknown representation '" + rep_name + "'");
  }
  r.block_is_dual = blocks;
  r.block_size = msize_;
  r.dim = msize_ * static_cast<int>(blocks.size());
  for (int a = 0; a < dim_; ++a) {
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(r.dim, r.dim);
    int off = 0;
    for (bool dual : blocks) {
      gen.block(off, off, msize_, msize_) = dual ? Eigen::MatrixXd(-basis_[a].transpose()) : basis_[a];
      off += msize_;
    }
    r.generators.push_back(gen);
  }
  return r;
}

// ---------------- algebra operations ----------------

Vec<double> structure_constants(const MatrixLieGroup& g) {
  const int k = g.dim();
  Vec<double> c(static_cast<size_t>(k) * k * k, 0.0);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      Eigen::MatrixXd comm = g.basis()[a] * g.basis()[b] - g.basis()[b] * g.basis()[a];
      Eigen::VectorXd coords = g.vee(comm);
      if ((g.hat(coords) - comm).cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidArgument(g.name() + ": basis not closed under the bracket");
      }
      for (int gm = 0; gm < k; ++gm) c[(static_cast<size_t>(gm) * k + a) * k + b] = coords[gm];
    }
  }
  return c;
}

Eigen::VectorXd Ad(const MatrixLieGroup& g, const Eigen::MatrixXd& element, const Eigen::VectorXd& xi) {
  g.validate_element(element);
  return g.vee(element * g.hat(xi) * element.inverse());
}

Eigen::VectorXd ad(const MatrixLieGroup& g, const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
  if (xi.size() != g.dim() || eta.size() != g.dim()) throw DimensionMismatch("ad: length mismatch");
  return to_eigen(bracket_t(g.structure(), g.dim(), to_vec(xi), to_vec(eta)));
}

Eigen::VectorXd coad(const MatrixLieGroup& g, const Eigen::VectorXd& xi, const Eigen::VectorXd& mu) {
  const int k = g.dim();
  if (xi.size() != k || mu.size() != k) throw DimensionMismatch("coad: length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
  const Vec<double>& c = g.structure();
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      for (int gm = 0; gm < k; ++gm) out[a] += c[(static_cast<size_t>(gm) * k + b) * k + a] * xi[b] * mu[gm];
    }
  }
  return out;
}

}  // namespace lpmech
