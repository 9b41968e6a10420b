#pragma once

#include <string>
#include <vector>

#include "vmbd/ignorable.hpp"
#include "vmbd/model.hpp"

namespace vmbd {

/// User choice of quasi-velocities u = jac(t,q) qdot + bias(t,q).
/// rows is p - s for the reduced pipeline and p for the full one; the rows
/// must be linearly independent wherever the map is built.
/// variesWithIgnorable declares that jac or bias read the trailing ignorable
/// coordinates; leave it false (the usual case, and the only one the built-in
/// cases use) and the equation engines skip differentiating along directions
/// every other model quantity is already required to ignore.
struct QuasiVelocityDef {
  int rows = 0;
  MatrixFn jac;    // rows x m
  VectorFn bias;   // rows; null means zero
  std::vector<std::string> labels;
  bool variesWithIgnorable = false;
};

/// Snapshot of the velocity map qdot = W u + X at one (t, q), obtained by
/// augmenting the quasi-velocity rows with the dynamical-constraint rows and
/// the kinematic-constraint rows and solving the square system with a pivoted
/// factorization. conditionNumber is the factorization's estimate for the
/// augmented matrix.
struct ReducedMap {
  MatX W;                       // m x rows
  VecX X;                       // m
  double conditionNumber = 1.0;
};

/// Condition estimate above this value is treated as a rank-deficient
/// augmented matrix (a bad quasi-velocity choice).
inline constexpr double kAugmentedConditionLimit = 1e12;

/// Builds the map at (t, q). Passing a constraint with s = 0 (and/or a
/// system with r = 0) yields the standard quasi-velocity map; the same solve
/// serves both pipelines. Throws SingularAugmentedMatrix when the augmented
/// matrix is effectively rank deficient.
ReducedMap build_reduced_map(const MultibodySystem& sys,
                             const QuasiVelocityDef& qv,
                             const DynamicalConstraint& dc, double t,
                             const VecX& q);

namespace detail {
/// Augmented stack, its factorization, and the solved map in one piece, so
/// the equation engines can re-solve against the same factor when they
/// propagate derivatives of the map.
struct AugmentedSolve {
  MatX stack;        // [quasi rows; momentum rows; constraint rows]
  VecX stackedBias;  // [quasi bias; momentum bias; constraint bias]
  PivotedFactor factor;
  ReducedMap map;
};

AugmentedSolve build_augmented_solve(const MultibodySystem& sys,
                                     const QuasiVelocityDef& qv,
                                     const DynamicalConstraint& dc, double t,
                                     const VecX& q,
                                     const MassDecomposition& md);

/// Same solve with a caller-supplied mass decomposition, so hot paths that
/// already assembled M and N do not assemble them twice.
ReducedMap build_reduced_map_from(const MultibodySystem& sys,
                                  const QuasiVelocityDef& qv,
                                  const DynamicalConstraint& dc, double t,
                                  const VecX& q, const MassDecomposition& md);
}  // namespace detail

/// qdot = W u + X.
VecX reconstruct_qdot(const ReducedMap& map, const VecX& u);

}  // namespace vmbd
