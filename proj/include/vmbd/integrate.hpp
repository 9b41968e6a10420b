#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "vmbd/linalg.hpp"

namespace vmbd {

using Rhs = std::function<VecX(double, const VecX&)>;

struct IntegratorSettings {
  double rtol = 1e-8;
  double atol = 1e-10;
  double sampleStep = 0.01;  // output grid spacing
  double tFinal = 50.0;
  double maxStep = std::numeric_limits<double>::infinity();
  enum class Mode { adaptive, fixed } mode = Mode::adaptive;
};

/// Time-sampled solution on the uniform output grid. qdots and work are
/// filled by the formulation layer after integration (the integrator does
/// not know how a state maps back to generalized velocities).
struct Trajectory {
  std::vector<double> times;
  std::vector<VecX> states;
  std::vector<VecX> qdots;
  std::vector<double> work;
};

/// Embedded 5(4) pair with PI step-size control (safety 0.9, step-scale
/// clamp [0.2, 5]), max-norm error weighting atol + rtol |z|, and
/// fourth-order dense output onto the sample grid. Internal steps are
/// adaptive; the sample grid only selects where the continuous extension is
/// evaluated. Mode::fixed instead takes one classical RK4 step per sample
/// interval.
Trajectory integrate_adaptive(const Rhs& rhs, const VecX& z0,
                              const IntegratorSettings& settings);

/// One classical fourth-order Runge-Kutta step.
VecX step_rk4(const Rhs& rhs, double t, const VecX& z, double h);

namespace detail {
/// One embedded step: fifth-order solution, error estimate, and the stage
/// slopes needed for dense output. f0 must equal rhs(t, z).
struct EmbeddedStep {
  VecX solution;       // fifth-order advance
  VecX errorEstimate;  // solution minus the embedded fourth-order result
  VecX endSlope;       // rhs at (t + h, solution); reusable as next f0
  VecX denseStage;     // weighted stage combination for the interpolant
};
EmbeddedStep dopri45_step(const Rhs& rhs, double t, const VecX& z,
                          const VecX& f0, double h);

/// Quartic interpolant over one accepted step, theta in [0, 1].
VecX dense_eval(const VecX& z0, const VecX& z1, const VecX& f0,
                const VecX& f1, const VecX& denseStage, double h,
                double theta);
}  // namespace detail

}  // namespace vmbd
