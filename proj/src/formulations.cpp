#include "vmbd/formulations.hpp"

#include <cmath>
#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {

constexpr double kInitialStateTolerance = 1e-9;
constexpr double kKktConditionLimit = 1e12;

struct BodyMaps {
  MatX B;
  Vec3 C;
  MatX D;
  Vec3 E;
};

std::vector<BodyMaps> eval_bodies(const MultibodySystem& sys, double t,
                                  const VecX& q) {
  const int m = sys.layout().m;
  std::vector<BodyMaps> out;
  out.reserve(sys.bodies().size());
  for (const auto& body : sys.bodies()) {
    BodyMaps bm;
    bm.B = body.linJac(t, q);
    bm.C = body.linBias ? body.linBias(t, q) : Vec3::Zero();
    bm.D = body.angJac ? body.angJac(t, q) : MatX::Zero(3, m);
    bm.E = body.angBias ? body.angBias(t, q) : Vec3::Zero();
    if (!bm.B.allFinite() || !bm.C.allFinite() || !bm.D.allFinite() ||
        !bm.E.allFinite()) {
      throw NonFiniteEvaluation("body kinematic map returned non-finite entries");
    }
    out.push_back(std::move(bm));
  }
  return out;
}

// Same assembly as derive_mass_decomposition but reusing already evaluated
// body maps; probe sweeps call this so each provider runs once per probe.
// Definiteness is checked at the expansion point, not at probe offsets.
MassDecomposition assemble_mass(const MultibodySystem& sys,
                                const std::vector<BodyMaps>& bodies,
                                bool checkDefinite = false) {
  const int m = sys.layout().m;
  MassDecomposition out;
  out.M = MatX::Zero(m, m);
  out.N = VecX::Zero(m);
  out.T0 = 0.0;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const BodyMaps& bm = bodies[i];
    const double mass = sys.bodies()[i].mass;
    const Mat3& inertia = sys.bodies()[i].inertia;
    const Vec3 ie = inertia * bm.E;
    out.M.noalias() += mass * bm.B.transpose() * bm.B;
    out.M.noalias() += bm.D.transpose() * inertia * bm.D;
    out.N.noalias() += mass * bm.B.transpose() * bm.C;
    out.N.noalias() += bm.D.transpose() * ie;
    out.T0 += 0.5 * mass * bm.C.squaredNorm() + 0.5 * bm.E.dot(ie);
  }
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  if (checkDefinite) {
    Eigen::LLT<MatX> llt(out.M);
    bool definite = llt.info() == Eigen::Success;
    if (definite) {
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
  }
  return out;
}

// Offsets into the flat probe bundle of raw model quantities. The bundle is
// pure assembly (no linear solves), so a probe costs the same for every
// formulation; map derivatives are recovered afterwards through the base
// factorization.
struct BundleLayout {
  int m = 0, k = 0, r = 0, bodies = 0;
  int offZ = 0, offM = 0, offN = 0, offA = 0, offB = 0, offBodies = 0;
  int total = 0;

  BundleLayout(int mm, int kk, int rr, int nBodies)
      : m(mm), k(kk), r(rr), bodies(nBodies) {
    offZ = k * m;
    offM = offZ + k;
    offN = offM + m * m;
    offA = offN + m;
    offB = offA + r * m;
    offBodies = offB + r;
    total = offBodies + 6 * m * bodies;
  }

  int bodyLin(int i) const { return offBodies + 6 * m * i; }
  int bodyAng(int i) const { return offBodies + 6 * m * i + 3 * m; }
};

VecX raw_bundle(const MultibodySystem& sys, const QuasiVelocityDef& qv,
                const BundleLayout& lay, double t, const VecX& q) {
  const auto bodies = eval_bodies(sys, t, q);
  const MassDecomposition md = assemble_mass(sys, bodies);

  VecX flat(lay.total);
  if (lay.k > 0) {
    const MatX y = qv.jac(t, q);
    flat.head(lay.k * lay.m) =
        Eigen::Map<const VecX>(y.data(), lay.k * lay.m);
    flat.segment(lay.offZ, lay.k) =
        qv.bias ? qv.bias(t, q) : VecX::Zero(lay.k);
  }
  flat.segment(lay.offM, lay.m * lay.m) =
      Eigen::Map<const VecX>(md.M.data(), lay.m * lay.m);
  flat.segment(lay.offN, lay.m) = md.N;
  if (lay.r > 0) {
    const MatX a = sys.constraintJac(t, q);
    flat.segment(lay.offA, lay.r * lay.m) =
        Eigen::Map<const VecX>(a.data(), lay.r * lay.m);
    flat.segment(lay.offB, lay.r) = sys.constraintBias(t, q);
  }
  for (int i = 0; i < lay.bodies; ++i) {
    flat.segment(lay.bodyLin(i), 3 * lay.m) =
        Eigen::Map<const VecX>(bodies[i].B.data(), 3 * lay.m);
    flat.segment(lay.bodyAng(i), 3 * lay.m) =
        Eigen::Map<const VecX>(bodies[i].D.data(), 3 * lay.m);
  }
  return flat;
}

MatX slice_matrix(const VecX& flat, int offset, int rows, int cols) {
  return Eigen::Map<const MatX>(flat.data() + offset, rows, cols);
}

}  // namespace

ReducedTerms reduced_terms(const MultibodySystem& sys,
                           const QuasiVelocityDef& qv,
                           const DynamicalConstraint& dc, double t,
                           const VecX& q, const VecX& u) {
  const int m = sys.layout().m;
  const int r = sys.layout().r;
  const int s = dc.count();
  const int k = qv.rows;
  if (u.size() != k) {
    throw std::invalid_argument("quasi-velocity vector has wrong length");
  }

  ReducedTerms terms;
  const auto bodies = eval_bodies(sys, t, q);
  const MassDecomposition md = assemble_mass(sys, bodies, true);
  const auto solve = detail::build_augmented_solve(sys, qv, dc, t, q, md);
  terms.map = solve.map;
  const MatX& W = terms.map.W;
  terms.qdot = W * u + terms.map.X;

  terms.mass = W.transpose() * md.M * W;
  terms.mass = 0.5 * (terms.mass + terms.mass.transpose()).eval();
  terms.bias = W.transpose() * (md.M * terms.map.X + md.N);
  terms.energyConstant = 0.5 * terms.map.X.dot(md.M * terms.map.X) +
                         terms.map.X.dot(md.N) + md.T0;

  // One probe sweep over the raw assembly quantities, skipping coordinates
  // everything in the bundle is known to ignore.
  const BundleLayout lay(m, k, r, static_cast<int>(bodies.size()));
  const int active = (s > 0 && !qv.variesWithIgnorable) ? m - s : m;
  const VectorPartials partials = vector_function_partials(
      [&sys, &qv, &lay](double tt, const VecX& qq) {
        return raw_bundle(sys, qv, lay, tt, qq);
      },
      t, q, active);

  // Rates along the flow of every raw quantity in one product.
  const VecX rate = partials.wrtTime + partials.wrtCoord * terms.qdot;

  const MatX massRate = slice_matrix(rate, lay.offM, m, m);
  const VecX biasRate = rate.segment(lay.offN, m);

  // d(W)/dt and d(X)/dt through the frozen factorization of the stack:
  // stack * W is constant and stack * X = -stackedBias.
  MatX stackRate(m, m);
  VecX stackedBiasRate(m);
  if (k > 0) {
    stackRate.topRows(k) = slice_matrix(rate, 0, k, m);
    stackedBiasRate.head(k) = rate.segment(lay.offZ, k);
  }
  if (s > 0) {
    stackRate.middleRows(k, s) = massRate.bottomRows(s);
    stackedBiasRate.segment(k, s) = biasRate.tail(s);  // momentum is constant
  }
  if (r > 0) {
    stackRate.bottomRows(r) = slice_matrix(rate, lay.offA, r, m);
    stackedBiasRate.tail(r) = rate.segment(lay.offB, r);
  }
  const MatX mapRate = -solve.factor.solve(MatX(stackRate * W));
  const VecX shiftRate = -solve.factor.solve(
      VecX(stackRate * terms.map.X + stackedBiasRate));

  // Rate of (mass u + bias) at frozen u.
  terms.convectiveRate =
      mapRate.transpose() * (md.M * terms.qdot + md.N) +
      W.transpose() * (massRate * terms.qdot +
                       md.M * (mapRate * u + shiftRate) + biasRate);

  terms.momentumProjection = VecX::Zero(k);
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const BodyMaps& bm = bodies[i];
    const Vec3 v = bm.B * terms.qdot + bm.C;
    const Vec3 omega = bm.D * terms.qdot + bm.E;
    const Vec3 angularMomentum = sys.bodies()[i].inertia * omega;

    const MatX linJacRate = slice_matrix(rate, lay.bodyLin(i), 3, m);
    const MatX angJacRate = slice_matrix(rate, lay.bodyAng(i), 3, m);
    const MatX linRate = linJacRate * W + bm.B * mapRate;
    const MatX angRate = angJacRate * W + bm.D * mapRate;

    terms.momentumProjection.noalias() +=
        sys.bodies()[i].mass * (linRate.transpose() * v);
    // The angular partial velocities are body-frame components; their
    // inertial rate adds the omega-cross transport of the rotating frame.
    terms.momentumProjection.noalias() += angRate.transpose() * angularMomentum;
    terms.momentumProjection.noalias() -=
        (bm.D * W).transpose() * omega.cross(angularMomentum);
  }

  const VecX qForces = generalized_forces(sys, t, q, terms.qdot);
  terms.appliedForce = W.transpose() * qForces;
  terms.forcing =
      terms.appliedForce + terms.momentumProjection - terms.convectiveRate;
  return terms;
}

namespace {

VecX quasi_rhs(const MultibodySystem& sys, const QuasiVelocityDef& qv,
               const DynamicalConstraint& dc, double t, const VecX& z) {
  const int m = sys.layout().m;
  const int k = qv.rows;
  const bool work = sys.forces().hasNonconservative();
  if (z.size() != m + k + (work ? 1 : 0)) {
    throw std::invalid_argument("state vector has wrong length");
  }
  if (!z.allFinite()) {
    throw NonFiniteEvaluation("state vector non-finite");
  }
  const VecX q = z.head(m);
  const VecX u = z.segment(m, k);

  const ReducedTerms terms = reduced_terms(sys, qv, dc, t, q, u);

  VecX udot(k);
  if (k > 0) {
    Eigen::LLT<MatX> llt(terms.mass);
    if (llt.info() != Eigen::Success) {
      throw SingularReducedMass("reduced mass matrix not positive definite");
    }
    udot = llt.solve(terms.forcing);
  }

  VecX zdot(z.size());
  zdot.head(m) = terms.qdot;
  zdot.segment(m, k) = udot;
  if (work) {
    zdot[m + k] = sys.ncForces(t, q, terms.qdot).dot(terms.qdot);
  }
  return zdot;
}

// Everything Lagrange and Maggi need from one probe sweep:
//   [ vec(M); N; T0; vec(a); b ]
struct VelocitySpaceTerms {
  MassDecomposition md;
  MatX a;
  VecX b;
  MatX massRate;      // dM/dt along the flow
  VecX biasRate;      // dN/dt along the flow
  VecX kineticGrad;   // explicit dT/dq at fixed qdot
  VecX constraintAccel;  // da/dt qdot + db/dt (acceleration-level residual)
};

VelocitySpaceTerms velocity_space_terms(const MultibodySystem& sys, double t,
                                        const VecX& q, const VecX& qdot) {
  const int m = sys.layout().m;
  const int r = sys.layout().r;
  const int s = sys.layout().s;

  VelocitySpaceTerms out;
  out.md = derive_mass_decomposition(sys, t, q);
  out.a = sys.constraintJac(t, q);
  out.b = sys.constraintBias(t, q);

  const auto bundle = [&sys, m, r](double tt, const VecX& qq) -> VecX {
    const MassDecomposition md = assemble_mass(sys, eval_bodies(sys, tt, qq));
    VecX flat(m * m + m + 1 + r * m + r);
    flat.head(m * m) = Eigen::Map<const VecX>(md.M.data(), m * m);
    flat.segment(m * m, m) = md.N;
    flat[m * m + m] = md.T0;
    if (r > 0) {
      const MatX a = sys.constraintJac(tt, qq);
      flat.segment(m * m + m + 1, r * m) =
          Eigen::Map<const VecX>(a.data(), r * m);
      flat.tail(r) = sys.constraintBias(tt, qq);
    }
    return flat;
  };

  // Mass terms and constraint rows of a system with trailing ignorable
  // coordinates do not depend on them, so those probe columns are skipped.
  const VectorPartials p =
      vector_function_partials(bundle, t, q, s > 0 ? m - s : m);

  const auto matAt = [](const VecX& flat, int offset, int rows, int cols) {
    return MatX(Eigen::Map<const MatX>(flat.data() + offset, rows, cols));
  };

  out.massRate = matAt(p.wrtTime, 0, m, m);
  out.biasRate = p.wrtTime.segment(m * m, m);
  out.kineticGrad = VecX::Zero(m);
  MatX aRate = r > 0 ? matAt(p.wrtTime, m * m + m + 1, r, m) : MatX::Zero(0, m);
  VecX bRate = r > 0 ? VecX(p.wrtTime.tail(r)) : VecX::Zero(0);

  for (int j = 0; j < m; ++j) {
    const VecX col = p.wrtCoord.col(j);
    const MatX dMdqj = matAt(col, 0, m, m);
    const VecX dNdqj = col.segment(m * m, m);
    const double dT0dqj = col[m * m + m];

    out.massRate.noalias() += qdot[j] * dMdqj;
    out.biasRate.noalias() += qdot[j] * dNdqj;
    out.kineticGrad[j] =
        0.5 * qdot.dot(dMdqj * qdot) + qdot.dot(dNdqj) + dT0dqj;
    if (r > 0) {
      aRate.noalias() += qdot[j] * matAt(col, m * m + m + 1, r, m);
      bRate.noalias() += qdot[j] * col.tail(r);
    }
  }

  out.constraintAccel = r > 0 ? VecX(aRate * qdot + bRate) : VecX::Zero(0);
  return out;
}

VecX unpack_second_order_state(const MultibodySystem& sys, const VecX& z,
                               VecX& q, VecX& qdot) {
  const int m = sys.layout().m;
  const bool work = sys.forces().hasNonconservative();
  if (z.size() != 2 * m + (work ? 1 : 0)) {
    throw std::invalid_argument("state vector has wrong length");
  }
  if (!z.allFinite()) {
    throw NonFiniteEvaluation("state vector non-finite");
  }
  q = z.head(m);
  qdot = z.segment(m, m);
  return z;
}

VecX pack_second_order_rate(const MultibodySystem& sys, double t,
                            const VecX& q, const VecX& qdot,
                            const VecX& qddot, Eigen::Index n) {
  const int m = sys.layout().m;
  VecX zdot(n);
  zdot.head(m) = qdot;
  zdot.segment(m, m) = qddot;
  if (sys.forces().hasNonconservative()) {
    zdot[2 * m] = sys.ncForces(t, q, qdot).dot(qdot);
  }
  return zdot;
}

}  // namespace

VecX reduced_volterra_rhs(const MultibodySystem& sys,
                          const QuasiVelocityDef& qv,
                          const DynamicalConstraint& dc, double t,
                          const VecX& z) {
  return quasi_rhs(sys, qv, dc, t, z);
}

VecX standard_volterra_rhs(const MultibodySystem& sys,
                           const QuasiVelocityDef& qvFull, double t,
                           const VecX& z) {
  return quasi_rhs(sys, qvFull, DynamicalConstraint::none(sys.layout().m), t,
                   z);
}

VecX lagrange_rhs(const MultibodySystem& sys, double t, const VecX& z) {
  const int m = sys.layout().m;
  const int r = sys.layout().r;
  VecX q, qdot;
  unpack_second_order_state(sys, z, q, qdot);

  const VelocitySpaceTerms vt = velocity_space_terms(sys, t, q, qdot);
  const VecX f = generalized_forces(sys, t, q, qdot) -
                 (vt.massRate * qdot + vt.biasRate - vt.kineticGrad);

  VecX qddot(m);
  if (r == 0) {
    Eigen::LLT<MatX> llt(vt.md.M);
    if (llt.info() != Eigen::Success) {
      throw SingularKKT("mass matrix not positive definite");
    }
    qddot = llt.solve(f);
  } else {
    MatX kkt = MatX::Zero(m + r, m + r);
    kkt.topLeftCorner(m, m) = vt.md.M;
    kkt.topRightCorner(m, r) = vt.a.transpose();
    kkt.bottomLeftCorner(r, m) = vt.a;
    VecX rhs(m + r);
    rhs.head(m) = f;
    rhs.tail(r) = -vt.constraintAccel;

    PivotedFactor factor(kkt);
    if (!(factor.conditionEstimate() < kKktConditionLimit)) {
      throw SingularKKT("constrained mass system is rank deficient");
    }
    qddot = factor.solve(rhs).head(m);
  }
  return pack_second_order_rate(sys, t, q, qdot, qddot, z.size());
}

VecX maggi_rhs(const MultibodySystem& sys, const QuasiVelocityDef& qvFull,
               double t, const VecX& z) {
  const int m = sys.layout().m;
  const int r = sys.layout().r;
  const int p = sys.layout().dof();
  if (qvFull.rows != p) {
    throw std::invalid_argument("maggi needs p quasi-velocity rows");
  }
  VecX q, qdot;
  unpack_second_order_state(sys, z, q, qdot);

  const VelocitySpaceTerms vt = velocity_space_terms(sys, t, q, qdot);
  const VecX f = generalized_forces(sys, t, q, qdot) -
                 (vt.massRate * qdot + vt.biasRate - vt.kineticGrad);

  // Null-space projection through the standard velocity map.
  const ReducedMap map = build_reduced_map(
      sys, qvFull, DynamicalConstraint::none(m), t, q);

  MatX lhs(m, m);
  lhs.topRows(p) = map.W.transpose() * vt.md.M;
  if (r > 0) lhs.bottomRows(r) = vt.a;
  VecX rhs(m);
  rhs.head(p) = map.W.transpose() * f;
  if (r > 0) rhs.tail(r) = -vt.constraintAccel;

  PivotedFactor factor(lhs);
  if (!(factor.conditionEstimate() < kKktConditionLimit)) {
    throw SingularProjection("projected mass system is rank deficient");
  }
  const VecX qddot = factor.solve(rhs);
  return pack_second_order_rate(sys, t, q, qdot, qddot, z.size());
}

MethodCard method_card(Method method, const MultibodySystem& sys) {
  const int m = sys.layout().m;
  const int s = sys.layout().s;
  const int p = sys.layout().dof();
  const int work = sys.forces().hasNonconservative() ? 1 : 0;
  switch (method) {
    case Method::lagrange:
    case Method::maggi:
      return {2 * m + work, m};
    case Method::kane:
      return {m + p + work, p};
    case Method::volterra_reduced:
      return {m + p - s + work, p - s};
  }
  throw std::invalid_argument("unknown method");
}

StateSpace::StateSpace(const MultibodySystem& sys, Method method,
                       QuasiVelocityDef qv, DynamicalConstraint dc)
    : sys_(std::make_shared<const MultibodySystem>(sys)),
      method_(method),
      qv_(std::move(qv)),
      dc_(std::move(dc)) {
  const int p = sys.layout().dof();
  const int s = sys.layout().s;
  switch (method_) {
    case Method::lagrange:
      break;
    case Method::maggi:
    case Method::kane:
      if (qv_.rows != p) {
        throw std::invalid_argument("full quasi-velocity set must have p rows");
      }
      break;
    case Method::volterra_reduced:
      if (qv_.rows != p - s) {
        throw std::invalid_argument(
            "reduced quasi-velocity set must have p - s rows");
      }
      if (dc_.count() != s) {
        throw std::invalid_argument(
            "dynamical constraint row count must match layout s");
      }
      break;
  }
}

int StateSpace::stateCount() const { return method_card(method_, *sys_).nStates; }

int StateSpace::equationCount() const {
  return method_card(method_, *sys_).nEquations;
}

bool StateSpace::hasWorkChannel() const {
  return sys_->forces().hasNonconservative();
}

int StateSpace::quasiCount() const {
  return (method_ == Method::kane || method_ == Method::volterra_reduced)
             ? qv_.rows
             : 0;
}

VecX StateSpace::initialState(double t0, const VecX& q0,
                              const VecX& qdot0) const {
  const int m = sys_->layout().m;
  if (q0.size() != m || qdot0.size() != m) {
    throw std::invalid_argument("initial state has wrong dimensions");
  }

  if (sys_->layout().r > 0) {
    const MatX a = sys_->constraintJac(t0, q0);
    const VecX b = sys_->constraintBias(t0, q0);
    const VecX res = a * qdot0 + b;
    const double scale = a.cwiseAbs().maxCoeff() *
                             qdot0.cwiseAbs().maxCoeff() +
                         (b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
    if (res.cwiseAbs().maxCoeff() > kInitialStateTolerance * (1.0 + scale)) {
      throw InconsistentInitialState(
          "initial velocities violate the kinematic constraints");
    }
  }
  if (method_ == Method::volterra_reduced && dc_.count() > 0) {
    const VecX res = dynamical_constraint_eval(dc_, t0, q0, qdot0);
    const double scale =
        dc_.momentum().cwiseAbs().maxCoeff() + qdot0.cwiseAbs().maxCoeff();
    if (res.cwiseAbs().maxCoeff() > kInitialStateTolerance * (1.0 + scale)) {
      throw InconsistentInitialState(
          "initial velocities violate the conserved-momentum rows");
    }
  }

  VecX z = VecX::Zero(stateCount());
  z.head(m) = q0;
  if (method_ == Method::lagrange || method_ == Method::maggi) {
    z.segment(m, m) = qdot0;
  } else if (qv_.rows > 0) {
    const VecX u0 = qv_.jac(t0, q0) * qdot0 +
                    (qv_.bias ? qv_.bias(t0, q0) : VecX::Zero(qv_.rows));
    z.segment(m, qv_.rows) = u0;
  }
  return z;  // trailing work component, when present, starts at zero
}

VecX StateSpace::rhs(double t, const VecX& z) const {
  switch (method_) {
    case Method::lagrange:
      return lagrange_rhs(*sys_, t, z);
    case Method::maggi:
      return maggi_rhs(*sys_, qv_, t, z);
    case Method::kane:
      return standard_volterra_rhs(*sys_, qv_, t, z);
    case Method::volterra_reduced:
      return reduced_volterra_rhs(*sys_, qv_, dc_, t, z);
  }
  throw std::invalid_argument("unknown method");
}

VecX StateSpace::coordinates(const VecX& z) const {
  return z.head(sys_->layout().m);
}

VecX StateSpace::velocities(double t, const VecX& z) const {
  const int m = sys_->layout().m;
  if (method_ == Method::lagrange || method_ == Method::maggi) {
    return z.segment(m, m);
  }
  const ReducedMap map =
      method_ == Method::volterra_reduced
          ? build_reduced_map(*sys_, qv_, dc_, t, z.head(m))
          : build_reduced_map(*sys_, qv_, DynamicalConstraint::none(m), t,
                              z.head(m));
  return reconstruct_qdot(map, z.segment(m, qv_.rows));
}

VecX StateSpace::quasiVelocities(const VecX& z) const {
  const int m = sys_->layout().m;
  if (method_ == Method::kane || method_ == Method::volterra_reduced) {
    return z.segment(m, qv_.rows);
  }
  return VecX::Zero(0);
}

double StateSpace::work(const VecX& z) const {
  return hasWorkChannel() ? z[z.size() - 1] : 0.0;
}

}  // namespace vmbd
