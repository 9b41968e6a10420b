#pragma once

#include <vector>

#include "vmbd/ignorable.hpp"
#include "vmbd/integrate.hpp"
#include "vmbd/model.hpp"

namespace vmbd {

/// max-abs and root-mean-square over a sample series, plus the same pair
/// normalized by a reference magnitude (taken as 1 when the reference is
/// below 1e-12).
struct SeriesNorm {
  double maxAbs = 0.0;
  double rms = 0.0;
  double relMaxAbs = 0.0;
  double relRms = 0.0;
};

SeriesNorm series_norm(const std::vector<double>& series,
                       double referenceMagnitude = 0.0);

/// Mechanical-energy accounting along a trajectory:
///   value(t) = T + V - accumulated work of the non-conservative forces.
/// drift is value - value(0); percent is 100 drift / |value(0)| when the
/// initial value is above 1e-12 in magnitude (zeros otherwise).
struct EnergyErrorSeries {
  std::vector<double> value;
  std::vector<double> drift;
  std::vector<double> percent;
  double initial = 0.0;
};

EnergyErrorSeries energy_error_series(const MultibodySystem& sys,
                                      const Trajectory& traj);

/// Per-sample constraint residual norms and the linear-momentum component
/// along a fixed inertial direction.
struct ConservationSeries {
  std::vector<double> kinematicResidual;  // |a qdot + b| per sample
  std::vector<double> dynamicalResidual;  // |M' qdot + N'| per sample
  std::vector<double> momentum;           // P . direction per sample
  std::vector<double> momentumDrift;      // momentum - momentum(0)
  double initialMomentum = 0.0;
};

ConservationSeries conservation_error_series(const MultibodySystem& sys,
                                             const DynamicalConstraint& dc,
                                             const Trajectory& traj,
                                             const Vec3& direction);

}  // namespace vmbd
