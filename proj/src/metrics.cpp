#include "vmbd/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {
constexpr double kReferenceFloor = 1e-12;

void require_annotated(const Trajectory& traj) {
  if (traj.times.empty()) {
    throw EmptySeries("trajectory has no samples");
  }
  if (traj.qdots.size() != traj.times.size()) {
    throw std::invalid_argument(
        "trajectory lacks reconstructed generalized velocities");
  }
}
}  // namespace

SeriesNorm series_norm(const std::vector<double>& series,
                       double referenceMagnitude) {
  if (series.empty()) {
    throw EmptySeries("cannot take norms of an empty series");
  }
  SeriesNorm out;
  double sumSq = 0.0;
  for (double v : series) {
    out.maxAbs = std::max(out.maxAbs, std::abs(v));
    sumSq += v * v;
  }
  out.rms = std::sqrt(sumSq / static_cast<double>(series.size()));
  const double ref = std::abs(referenceMagnitude) > kReferenceFloor
                         ? std::abs(referenceMagnitude)
                         : 1.0;
  out.relMaxAbs = out.maxAbs / ref;
  out.relRms = out.rms / ref;
  return out;
}

EnergyErrorSeries energy_error_series(const MultibodySystem& sys,
                                      const Trajectory& traj) {
  require_annotated(traj);
  const std::size_t n = traj.times.size();
  const bool haveWork = traj.work.size() == n;

  EnergyErrorSeries out;
  out.value.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    const VecX q = traj.states[i].head(sys.layout().m);
    const double e = kinetic_energy(sys, t, q, traj.qdots[i]) +
                     sys.potential(t, q) - (haveWork ? traj.work[i] : 0.0);
    out.value.push_back(e);
  }
  out.initial = out.value.front();
  out.drift.reserve(n);
  out.percent.reserve(n);
  const bool scaled = std::abs(out.initial) > kReferenceFloor;
  for (double e : out.value) {
    const double d = e - out.initial;
    out.drift.push_back(d);
    out.percent.push_back(scaled ? 100.0 * d / std::abs(out.initial) : 0.0);
  }
  return out;
}

ConservationSeries conservation_error_series(const MultibodySystem& sys,
                                             const DynamicalConstraint& dc,
                                             const Trajectory& traj,
                                             const Vec3& direction) {
  require_annotated(traj);
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("momentum direction must be a unit vector");
  }
  const std::size_t n = traj.times.size();
  const int m = sys.layout().m;

  ConservationSeries out;
  out.kinematicResidual.reserve(n);
  out.dynamicalResidual.reserve(n);
  out.momentum.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    const VecX q = traj.states[i].head(m);
    const VecX& qdot = traj.qdots[i];

    if (sys.layout().r > 0) {
      out.kinematicResidual.push_back(
          kinematic_constraint_eval(sys, t, q, qdot).norm());
    } else {
      out.kinematicResidual.push_back(0.0);
    }

    if (dc.count() > 0) {
      out.dynamicalResidual.push_back(
          dynamical_constraint_eval(dc, t, q, qdot).norm());
    } else {
      out.dynamicalResidual.push_back(0.0);
    }

    double p = 0.0;
    for (const auto& body : sys.bodies()) {
      const Vec3 v = body.linJac(t, q) * qdot +
                     (body.linBias ? body.linBias(t, q) : Vec3::Zero());
      p += body.mass * v.dot(direction);
    }
    out.momentum.push_back(p);
  }

  out.initialMomentum = out.momentum.front();
  out.momentumDrift.reserve(n);
  for (double p : out.momentum) {
    out.momentumDrift.push_back(p - out.initialMomentum);
  }
  return out;
}

}  // namespace vmbd
