#include "vmbd/quasivel.hpp"

#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

ReducedMap build_reduced_map(const MultibodySystem& sys,
                             const QuasiVelocityDef& qv,
                             const DynamicalConstraint& dc, double t,
                             const VecX& q) {
  if (!q.allFinite()) {
    throw NonFiniteEvaluation("configuration vector is non-finite");
  }
  return detail::build_reduced_map_from(sys, qv, dc, t, q,
                                        derive_mass_decomposition(sys, t, q));
}

detail::AugmentedSolve detail::build_augmented_solve(
    const MultibodySystem& sys, const QuasiVelocityDef& qv,
    const DynamicalConstraint& dc, double t, const VecX& q,
    const MassDecomposition& md) {
  const int m = sys.layout().m;
  const int r = sys.layout().r;
  const int s = dc.count();
  const int k = qv.rows;
  if (k + s + r != m) {
    throw std::invalid_argument(
        "quasi-velocity rows + dynamical rows + constraint rows must equal m");
  }

  MatX A(m, m);
  VecX stackedBias(m);

  if (k > 0) {
    const MatX y = qv.jac(t, q);
    if (y.rows() != k || y.cols() != m) {
      throw std::invalid_argument("quasi-velocity Jacobian has wrong shape");
    }
    if (!y.allFinite()) {
      throw NonFiniteEvaluation("quasi-velocity Jacobian non-finite");
    }
    A.topRows(k) = y;
    stackedBias.head(k) = qv.bias ? qv.bias(t, q) : VecX::Zero(k);
  }
  if (s > 0) {
    A.middleRows(k, s) = md.M.bottomRows(s);
    stackedBias.segment(k, s) = md.N.tail(s) - dc.momentum();
  }
  if (r > 0) {
    A.bottomRows(r) = sys.constraintJac(t, q);
    stackedBias.tail(r) = sys.constraintBias(t, q);
  }
  if (!stackedBias.allFinite()) {
    throw NonFiniteEvaluation("stacked bias vector non-finite");
  }

  PivotedFactor factor(A);
  if (!(factor.conditionEstimate() < kAugmentedConditionLimit)) {
    throw SingularAugmentedMatrix(
        "augmented velocity-map matrix is rank deficient (condition estimate "
        "above limit); choose independent quasi-velocities");
  }

  ReducedMap map;
  map.conditionNumber = factor.conditionEstimate();
  MatX rhsW = MatX::Zero(m, k);
  rhsW.topRows(k).setIdentity();
  map.W = factor.solve(rhsW);
  map.X = factor.solve(VecX(-stackedBias));

  return detail::AugmentedSolve{std::move(A), std::move(stackedBias),
                                std::move(factor), std::move(map)};
}

ReducedMap detail::build_reduced_map_from(const MultibodySystem& sys,
                                          const QuasiVelocityDef& qv,
                                          const DynamicalConstraint& dc,
                                          double t, const VecX& q,
                                          const MassDecomposition& md) {
  return detail::build_augmented_solve(sys, qv, dc, t, q, md).map;
}

VecX reconstruct_qdot(const ReducedMap& map, const VecX& u) {
  if (u.size() != map.W.cols()) {
    throw std::invalid_argument("quasi-velocity vector has wrong length");
  }
  if (!u.allFinite()) {
    throw NonFiniteEvaluation("quasi-velocity vector non-finite");
  }
  return map.W * u + map.X;
}

}  // namespace vmbd
