#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vmbd/model.hpp"

namespace vmbd {

/// Conservation of the generalized momentum conjugate to the trailing
/// ignorable coordinates, held as a velocity-level constraint
///   rowJac(t,q) qdot + bias(t,q) = 0,
/// where rowJac is the last s rows of the mass matrix and
/// bias = N_tail - momentum. The momentum vector is computed once from the
/// initial state and frozen; re-deriving it later would mask drift.
class DynamicalConstraint {
public:
  /// Builds the constraint for a system with s >= 1 trailing ignorable
  /// coordinates. Throws NoIgnorableCoordinates when s = 0.
  static DynamicalConstraint fromInitialState(const MultibodySystem& sys,
                                              double t0, const VecX& q0,
                                              const VecX& qdot0);

  /// Empty constraint (s = 0) for pipelines that run without ignorable
  /// coordinates; m is the coordinate count of the target system.
  static DynamicalConstraint none(int m);

  int count() const { return s_; }              // s
  int coordinateCount() const { return m_; }    // m
  const VecX& momentum() const { return momentum_; }

  MatX rowJac(double t, const VecX& q) const;   // s x m
  VecX bias(double t, const VecX& q) const;     // s

private:
  DynamicalConstraint(int m, int s, VecX momentum,
                      std::shared_ptr<const MultibodySystem> sys)
      : m_(m), s_(s), momentum_(std::move(momentum)), sys_(std::move(sys)) {}

  int m_ = 0;
  int s_ = 0;
  VecX momentum_;
  std::shared_ptr<const MultibodySystem> sys_;  // private immutable copy
};

/// Generalized momentum conjugate to the trailing s coordinates at a state:
/// last s rows of M times qdot plus the tail of N.
VecX initial_generalized_momentum(const MultibodySystem& sys, double t0,
                                  const VecX& q0, const VecX& qdot0);

/// rowJac qdot + bias at the given state; identically zero along exact
/// solutions of the dynamics.
VecX dynamical_constraint_eval(const DynamicalConstraint& dc, double t,
                               const VecX& q, const VecX& qdot);

/// Numerical screening of every coordinate against the ignorability
/// conditions: the Lagrangian, the constraint columns, and the applied
/// generalized forces must all be insensitive to the candidate.
struct CandidateCheck {
  std::string name;
  double maxLagrangianGradient = 0.0;
  double maxConstraintColumn = 0.0;
  double maxAppliedForce = 0.0;
  bool lagrangianIndependent = false;
  bool constraintColumnZero = false;
  bool forceZero = false;

  bool accepted() const {
    return lagrangianIndependent && constraintColumnZero && forceZero;
  }
};

struct Definition1Report {
  std::vector<CandidateCheck> candidates;  // one per coordinate
  bool advertisedAccepted = false;         // the trailing s all qualify

  std::vector<int> acceptedIndices() const;
};

struct StateSample {
  double t = 0.0;
  VecX q;
  VecX qdot;
};

/// Screens all m coordinates over the supplied samples. A candidate is
/// accepted only if every sample keeps all three violation measures below
/// 1e-9 * (1 + scale of the quantity involved). Violations are reported,
/// never silently discarded.
Definition1Report verify_definition1(const MultibodySystem& sys,
                                     const std::vector<StateSample>& samples);

}  // namespace vmbd
