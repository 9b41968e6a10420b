#include "vmbd/model.hpp"

#include <cmath>
#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

BodyKinematics BodyKinematics::pointMass(double mass, MatrixFn linJac,
                                         Vec3Fn linBias) {
  BodyKinematics b;
  b.mass = mass;
  b.inertia = Mat3::Zero();
  b.linJac = std::move(linJac);
  b.linBias = std::move(linBias);
  return b;
}

MultibodySystem::MultibodySystem(CoordinateLayout layout,
                                 std::vector<BodyKinematics> bodies,
                                 ForceModel forces,
                                 KinematicConstraint constraint)
    : layout_(std::move(layout)),
      bodies_(std::move(bodies)),
      forces_(std::move(forces)),
      constraint_(std::move(constraint)) {
  require(layout_.m >= 1, "layout: m must be at least 1");
  require(layout_.r >= 0 && layout_.r <= layout_.m, "layout: 0 <= r <= m");
  require(layout_.s >= 0, "layout: s must be non-negative");
  require(layout_.s <= layout_.dof(), "layout: s must not exceed p = m - r");
  if (layout_.names.empty()) {
    for (int i = 0; i < layout_.m; ++i) {
      layout_.names.push_back("q" + std::to_string(i + 1));
    }
  }
  require(static_cast<int>(layout_.names.size()) == layout_.m,
          "layout: names must have one entry per coordinate");
  require(!bodies_.empty(), "system needs at least one body");
  for (const auto& b : bodies_) {
    require(b.mass > 0.0, "body mass must be positive");
    require(static_cast<bool>(b.linJac), "body needs a linear-velocity map");
    const Mat3 asym = b.inertia - b.inertia.transpose();
    require(asym.cwiseAbs().maxCoeff() <=
                1e-12 * std::max(1.0, b.inertia.cwiseAbs().maxCoeff()),
            "body inertia must be symmetric");
    // Positive semidefinite: thin rods and point masses carry singular
    // centroidal inertia, so definiteness is enforced on the assembled mass
    // matrix instead.
    Eigen::SelfAdjointEigenSolver<Mat3> es(b.inertia);
    require(es.eigenvalues().minCoeff() >=
                -1e-10 * std::max(1.0, b.inertia.cwiseAbs().maxCoeff()),
            "body inertia must be positive semidefinite");
  }
  if (layout_.r > 0) {
    require(static_cast<bool>(constraint_.jac),
            "constrained system needs a constraint Jacobian");
  }
}

MatX MultibodySystem::constraintJac(double t, const VecX& q) const {
  if (layout_.r == 0) return MatX::Zero(0, layout_.m);
  MatX a = constraint_.jac(t, q);
  if (!a.allFinite()) {
    throw NonFiniteEvaluation("constraint Jacobian has non-finite entries");
  }
  if (a.rows() != layout_.r || a.cols() != layout_.m) {
    throw std::invalid_argument("constraint Jacobian has wrong dimensions");
  }
  return a;
}

VecX MultibodySystem::constraintBias(double t, const VecX& q) const {
  if (layout_.r == 0) return VecX::Zero(0);
  if (!constraint_.bias) return VecX::Zero(layout_.r);
  VecX b = constraint_.bias(t, q);
  if (!b.allFinite()) {
    throw NonFiniteEvaluation("constraint bias has non-finite entries");
  }
  return b;
}

double MultibodySystem::potential(double t, const VecX& q) const {
  if (!forces_.potential) return 0.0;
  const double v = forces_.potential(t, q);
  if (!std::isfinite(v)) {
    throw NonFiniteEvaluation("potential returned a non-finite value");
  }
  return v;
}

VecX MultibodySystem::potentialGradient(double t, const VecX& q) const {
  if (!forces_.potential) return VecX::Zero(layout_.m);
  return scalar_gradient_wrt_q(
      [this](double tt, const VecX& qq) { return potential(tt, qq); }, t, q);
}

VecX MultibodySystem::ncForces(double t, const VecX& q,
                               const VecX& qdot) const {
  if (!forces_.ncForces) return VecX::Zero(layout_.m);
  VecX f = forces_.ncForces(t, q, qdot);
  if (!f.allFinite()) {
    throw NonFiniteEvaluation("applied generalized forces non-finite");
  }
  return f;
}

MassDecomposition derive_mass_decomposition(const MultibodySystem& sys,
                                            double t, const VecX& q) {
  const int m = sys.layout().m;
  if (!q.allFinite()) {
    throw NonFiniteEvaluation("configuration vector is non-finite");
  }

  MassDecomposition out;
  out.M = MatX::Zero(m, m);
  out.N = VecX::Zero(m);
  out.T0 = 0.0;

  for (const auto& body : sys.bodies()) {
    const MatX B = body.linJac(t, q);
    const Vec3 C = body.linBias ? body.linBias(t, q) : Vec3::Zero();
    const MatX D = body.angJac ? body.angJac(t, q) : MatX::Zero(3, m);
    const Vec3 E = body.angBias ? body.angBias(t, q) : Vec3::Zero();
    if (!B.allFinite() || !C.allFinite() || !D.allFinite() || !E.allFinite()) {
      throw NonFiniteEvaluation("body kinematic map returned non-finite entries");
    }
    const Vec3 IE = body.inertia * E;
    out.M.noalias() += body.mass * B.transpose() * B;
    out.M.noalias() += D.transpose() * body.inertia * D;
    out.N.noalias() += body.mass * B.transpose() * C;
    out.N.noalias() += D.transpose() * IE;
    out.T0 += 0.5 * body.mass * C.squaredNorm() + 0.5 * E.dot(IE);
  }

  // Exact symmetry by construction.
  out.M = 0.5 * (out.M + out.M.transpose()).eval();

  Eigen::LLT<MatX> llt(out.M);
  bool definite = llt.info() == Eigen::Success;
  if (definite) {
    // A zero pivot can slip through the factorization; reject effectively
    // rank-deficient matrices by the squared pivot ratio.
    const VecX d = llt.matrixLLT().diagonal();
    const double lo = d.minCoeff();
    const double hi = d.maxCoeff();
    definite = lo > 0.0 && (hi / lo) * (hi / lo) < 1e12;
  }
  if (!definite) {
    throw SingularMass(
        "assembled mass matrix is not positive definite; the model has a "
        "massless direction or inconsistent kinematic maps");
  }
  return out;
}

VecX generalized_forces(const MultibodySystem& sys, double t, const VecX& q,
                        const VecX& qdot) {
  if (!q.allFinite() || !qdot.allFinite()) {
    throw NonFiniteEvaluation("state is non-finite");
  }
  VecX Q = sys.ncForces(t, q, qdot);
  if (sys.forces().hasPotential()) {
    Q -= sys.potentialGradient(t, q);
  }
  return Q;
}

VecX kinematic_constraint_eval(const MultibodySystem& sys, double t,
                               const VecX& q, const VecX& qdot) {
  if (sys.layout().r == 0) return VecX::Zero(0);
  return sys.constraintJac(t, q) * qdot + sys.constraintBias(t, q);
}

double kinetic_energy(const MultibodySystem& sys, double t, const VecX& q,
                      const VecX& qdot) {
  const MassDecomposition md = derive_mass_decomposition(sys, t, q);
  return 0.5 * qdot.dot(md.M * qdot) + qdot.dot(md.N) + md.T0;
}

}  // namespace vmbd
