#pragma once

#include <memory>
#include <string>

#include "vmbd/ignorable.hpp"
#include "vmbd/model.hpp"
#include "vmbd/quasivel.hpp"

namespace vmbd {

enum class Method { lagrange, maggi, kane, volterra_reduced };

/// Advertised first-order state count and dynamical equation count. The
/// accumulated-work quadrature counts as one extra state whenever the system
/// carries non-conservative forces.
struct MethodCard {
  int nStates = 0;
  int nEquations = 0;
};

MethodCard method_card(Method method, const MultibodySystem& sys);

/// All terms of the quasi-velocity equations M_red udot = forcing at one
/// state. Field names describe roles:
///   mass           reduced mass matrix  W' M W
///   bias           W' (M X + N)
///   energyConstant 1/2 X' M X + X' N + T0
///   convectiveRate time-plus-convection derivative of (mass u + bias)
///                  taken at frozen u
///   momentumProjection  sum over bodies of the momentum-weighted rates of
///                  the partial-velocity matrices (angular part includes the
///                  omega-cross transport of the body-frame components)
///   appliedForce   W' Q
///   forcing        appliedForce + momentumProjection - convectiveRate
struct ReducedTerms {
  MatX mass;
  VecX bias;
  double energyConstant = 0.0;
  VecX convectiveRate;
  VecX momentumProjection;
  VecX appliedForce;
  VecX forcing;
  ReducedMap map;   // velocity map used for the terms
  VecX qdot;        // reconstructed generalized velocities
};

/// Evaluates every term of the reduced (or, with an empty dynamical
/// constraint, the standard) quasi-velocity equations at (t, q, u).
ReducedTerms reduced_terms(const MultibodySystem& sys,
                           const QuasiVelocityDef& qv,
                           const DynamicalConstraint& dc, double t,
                           const VecX& q, const VecX& u);

/// State-derivative functions. State layout:
///   volterra_reduced  z = [q; u_reduced; (work)]
///   kane              z = [q; u_full;    (work)]
///   lagrange, maggi   z = [q; qdot;      (work)]
/// The trailing work component is present exactly when the system has
/// non-conservative forces; its rate is ncForces . qdot.
VecX reduced_volterra_rhs(const MultibodySystem& sys,
                          const QuasiVelocityDef& qv,
                          const DynamicalConstraint& dc, double t,
                          const VecX& z);

VecX standard_volterra_rhs(const MultibodySystem& sys,
                           const QuasiVelocityDef& qvFull, double t,
                           const VecX& z);

VecX lagrange_rhs(const MultibodySystem& sys, double t, const VecX& z);

VecX maggi_rhs(const MultibodySystem& sys, const QuasiVelocityDef& qvFull,
               double t, const VecX& z);

/// Bundles one system + method into the callable pieces an integrator and
/// the benchmark harness need. Copies its inputs; safe to share across
/// threads once built.
class StateSpace {
public:
  StateSpace(const MultibodySystem& sys, Method method, QuasiVelocityDef qv,
             DynamicalConstraint dc);

  Method method() const { return method_; }
  const MultibodySystem& system() const { return *sys_; }
  int stateCount() const;
  int equationCount() const;
  bool hasWorkChannel() const;
  int quasiCount() const;  // 0 for lagrange/maggi

  /// Validates the initial state against the kinematic (and, for the reduced
  /// pipeline, dynamical) constraints, then packs it into z-space.
  VecX initialState(double t0, const VecX& q0, const VecX& qdot0) const;

  VecX rhs(double t, const VecX& z) const;
  VecX coordinates(const VecX& z) const;
  VecX velocities(double t, const VecX& z) const;
  VecX quasiVelocities(const VecX& z) const;
  double work(const VecX& z) const;

private:
  std::shared_ptr<const MultibodySystem> sys_;
  Method method_;
  QuasiVelocityDef qv_;
  DynamicalConstraint dc_;
};

}  // namespace vmbd
