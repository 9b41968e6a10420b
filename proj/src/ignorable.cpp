#include "vmbd/ignorable.hpp"

#include <cmath>
#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {
constexpr double kDefinitionTolerance = 1e-9;
}

DynamicalConstraint DynamicalConstraint::fromInitialState(
    const MultibodySystem& sys, double t0, const VecX& q0, const VecX& qdot0) {
  const int s = sys.layout().s;
  if (s == 0) {
    throw NoIgnorableCoordinates(
        "system layout declares no ignorable coordinates");
  }
  VecX g = initial_generalized_momentum(sys, t0, q0, qdot0);
  return DynamicalConstraint(sys.layout().m, s, std::move(g),
                             std::make_shared<const MultibodySystem>(sys));
}

DynamicalConstraint DynamicalConstraint::none(int m) {
  return DynamicalConstraint(m, 0, VecX::Zero(0), nullptr);
}

MatX DynamicalConstraint::rowJac(double t, const VecX& q) const {
  if (s_ == 0) return MatX::Zero(0, m_);
  const MassDecomposition md = derive_mass_decomposition(*sys_, t, q);
  return md.M.bottomRows(s_);
}

VecX DynamicalConstraint::bias(double t, const VecX& q) const {
  if (s_ == 0) return VecX::Zero(0);
  const MassDecomposition md = derive_mass_decomposition(*sys_, t, q);
  return md.N.tail(s_) - momentum_;
}

VecX initial_generalized_momentum(const MultibodySystem& sys, double t0,
                                  const VecX& q0, const VecX& qdot0) {
  const int s = sys.layout().s;
  if (s == 0) {
    throw NoIgnorableCoordinates(
        "generalized momentum requested for a layout with s = 0");
  }
  if (!q0.allFinite() || !qdot0.allFinite()) {
    throw NonFiniteEvaluation("initial state is non-finite");
  }
  const MassDecomposition md = derive_mass_decomposition(sys, t0, q0);
  return md.M.bottomRows(s) * qdot0 + md.N.tail(s);
}

VecX dynamical_constraint_eval(const DynamicalConstraint& dc, double t,
                               const VecX& q, const VecX& qdot) {
  if (!q.allFinite() || !qdot.allFinite()) {
    throw NonFiniteEvaluation("state is non-finite");
  }
  if (dc.count() == 0) return VecX::Zero(0);
  return dc.rowJac(t, q) * qdot + dc.bias(t, q);
}

Definition1Report verify_definition1(const MultibodySystem& sys,
                                     const std::vector<StateSample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("verify_definition1 needs at least one sample");
  }
  const int m = sys.layout().m;
  const int s = sys.layout().s;

  Definition1Report report;
  report.candidates.resize(m);
  for (int j = 0; j < m; ++j) {
    report.candidates[j].name = sys.layout().names[j];
    report.candidates[j].lagrangianIndependent = true;
    report.candidates[j].constraintColumnZero = true;
    report.candidates[j].forceZero = true;
  }

  for (const auto& sample : samples) {
    if (!sample.q.allFinite() || !sample.qdot.allFinite()) {
      throw NonFiniteEvaluation("definition sample is non-finite");
    }

    // Gradient of L = T - V with respect to q, by the shared policy.
    const VecX gradL = scalar_gradient_wrt_q(
        [&](double t, const VecX& q) {
          return kinetic_energy(sys, t, q, sample.qdot) - sys.potential(t, q);
        },
        sample.t, sample.q);
    const double gradScale = gradL.cwiseAbs().maxCoeff();
    const double gradTol = kDefinitionTolerance * (1.0 + gradScale);

    const MatX a = sys.constraintJac(sample.t, sample.q);
    const double aScale = a.size() > 0 ? a.cwiseAbs().maxCoeff() : 0.0;
    const double aTol = kDefinitionTolerance * (1.0 + aScale);

    const VecX qnc = sys.ncForces(sample.t, sample.q, sample.qdot);
    const double fScale = qnc.cwiseAbs().maxCoeff();
    const double fTol = kDefinitionTolerance * (1.0 + fScale);

    for (int j = 0; j < m; ++j) {
      CandidateCheck& c = report.candidates[j];

      const double dL = std::abs(gradL[j]);
      c.maxLagrangianGradient = std::max(c.maxLagrangianGradient, dL);
      if (dL > gradTol) c.lagrangianIndependent = false;

      const double col = a.rows() > 0 ? a.col(j).cwiseAbs().maxCoeff() : 0.0;
      c.maxConstraintColumn = std::max(c.maxConstraintColumn, col);
      if (col > aTol) c.constraintColumnZero = false;

      const double f = std::abs(qnc[j]);
      c.maxAppliedForce = std::max(c.maxAppliedForce, f);
      if (f > fTol) c.forceZero = false;
    }
  }

  report.advertisedAccepted = true;
  for (int j = m - s; j < m; ++j) {
    if (!report.candidates[j].accepted()) report.advertisedAccepted = false;
  }
  return report;
}

std::vector<int> Definition1Report::acceptedIndices() const {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(candidates.size()); ++j) {
    if (candidates[j].accepted()) out.push_back(j);
  }
  return out;
}

}  // namespace vmbd
