#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vmbd/linalg.hpp"
#include "vmbd/numdiff.hpp"

namespace vmbd {

using Vec3Fn = std::function<Vec3(double, const VecX&)>;
using ScalarFn = std::function<double(double, const VecX&)>;
using GeneralizedForceFn =
    std::function<VecX(double, const VecX&, const VecX&)>;

/// Coordinate bookkeeping. Ignorable coordinates, when present, occupy the
/// last s positions of q; reordering is the caller's responsibility.
struct CoordinateLayout {
  int m = 0;  // generalized coordinates
  int s = 0;  // ignorable coordinates (trailing block of q)
  int r = 0;  // velocity-level kinematic constraints
  std::vector<std::string> names;

  int dof() const { return m - r; }            // p
  int reducedCount() const { return m - r - s; }  // p - s
};

/// Velocity-level kinematic description of one rigid body:
///   linear velocity of the mass center  = linJac(t,q) qdot + linBias(t,q)
///   angular velocity (body components)  = angJac(t,q) qdot + angBias(t,q)
/// The inertia matrix is centroidal and expressed in the same body frame the
/// angular-velocity components live in. Null bias/angular providers mean zero.
struct BodyKinematics {
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();
  MatrixFn linJac;   // 3 x m
  Vec3Fn linBias;
  MatrixFn angJac;   // 3 x m
  Vec3Fn angBias;

  static BodyKinematics pointMass(double mass, MatrixFn linJac,
                                  Vec3Fn linBias = nullptr);
};

/// Conservative effects live exclusively in the potential; ncForces holds
/// actuator and other non-conservative generalized forces in q-dot space.
struct ForceModel {
  ScalarFn potential;            // may be null (no potential)
  GeneralizedForceFn ncForces;   // may be null (no applied forces)

  bool hasPotential() const { return static_cast<bool>(potential); }
  bool hasNonconservative() const { return static_cast<bool>(ncForces); }
};

/// Velocity-level constraint jac(t,q) qdot + bias(t,q) = 0 with r rows.
/// Both providers may be null when r = 0.
struct KinematicConstraint {
  MatrixFn jac;   // r x m
  VectorFn bias;  // r
};

/// Immutable declarative description of a multibody system. All providers
/// must be pure functions of their arguments; evaluation never mutates the
/// system, so concurrent use is safe.
class MultibodySystem {
public:
  MultibodySystem(CoordinateLayout layout, std::vector<BodyKinematics> bodies,
                  ForceModel forces, KinematicConstraint constraint);

  const CoordinateLayout& layout() const { return layout_; }
  const std::vector<BodyKinematics>& bodies() const { return bodies_; }
  const ForceModel& forces() const { return forces_; }
  const KinematicConstraint& constraint() const { return constraint_; }

  MatX constraintJac(double t, const VecX& q) const;   // r x m
  VecX constraintBias(double t, const VecX& q) const;  // r

  double potential(double t, const VecX& q) const;
  VecX potentialGradient(double t, const VecX& q) const;
  VecX ncForces(double t, const VecX& q, const VecX& qdot) const;

private:
  CoordinateLayout layout_;
  std::vector<BodyKinematics> bodies_;
  ForceModel forces_;
  KinematicConstraint constraint_;
};

/// Kinetic energy in generalized-velocity space:
///   T(t,q,qdot) = 1/2 qdot' M qdot + qdot' N + T0.
struct MassDecomposition {
  MatX M;
  VecX N;
  double T0 = 0.0;
};

/// Assembles M, N, T0 from the per-body kinematic maps. M is symmetrized
/// exactly and checked for positive definiteness (SingularMass otherwise).
MassDecomposition derive_mass_decomposition(const MultibodySystem& sys,
                                            double t, const VecX& q);

/// Q = ncForces(t,q,qdot) - dV/dq(t,q), the total generalized force in
/// generalized-velocity space.
VecX generalized_forces(const MultibodySystem& sys, double t, const VecX& q,
                        const VecX& qdot);

/// Residual of the velocity-level kinematic constraints; empty when r = 0.
VecX kinematic_constraint_eval(const MultibodySystem& sys, double t,
                               const VecX& q, const VecX& qdot);

/// T evaluated through the decomposition.
double kinetic_energy(const MultibodySystem& sys, double t, const VecX& q,
                      const VecX& qdot);

}  // namespace vmbd
