#include "vmbd/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

// Fifth-order minus embedded fourth-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Dense-output weights (fourth-order continuous extension).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kMinScale = 0.2;
constexpr double kMaxScale = 5.0;
constexpr double kBeta = 0.04;           // PI stabilization
constexpr double kExpo = 0.2 - kBeta * 0.75;

double error_norm(const VecX& err, const VecX& z0, const VecX& z1,
                  double atol, double rtol) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc =
        atol + rtol * std::max(std::abs(z0[i]), std::abs(z1[i]));
    norm = std::max(norm, std::abs(err[i]) / sc);
  }
  return norm;
}

// Hairer-style automatic initial step selection.
double initial_step(const Rhs& rhs, double t0, const VecX& z0, const VecX& f0,
                    double atol, double rtol, double hmax) {
  const auto weighted = [&](const VecX& v, const VecX& ref) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double sc = atol + rtol * std::abs(ref[i]);
      acc += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(v.size(), 1)));
  };

  const double d0 = weighted(z0, z0);
  const double d1n = weighted(f0, z0);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, hmax);

  const VecX z1 = z0 + h0 * f0;
  const VecX f1 = rhs(t0 + h0, z1);
  const double d2 = weighted(VecX(f1 - f0), z0) / h0;

  double h1;
  if (std::max(d1n, d2) <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1n, d2), 0.2);
  }
  return std::min({100.0 * h0, h1, hmax});
}

}  // namespace

namespace detail {

EmbeddedStep dopri45_step(const Rhs& rhs, double t, const VecX& z,
                          const VecX& f0, double h) {
  const VecX& k1 = f0;
  const VecX k2 = rhs(t + c2 * h, VecX(z + h * (a21 * k1)));
  const VecX k3 = rhs(t + c3 * h, VecX(z + h * (a31 * k1 + a32 * k2)));
  const VecX k4 =
      rhs(t + c4 * h, VecX(z + h * (a41 * k1 + a42 * k2 + a43 * k3)));
  const VecX k5 = rhs(
      t + c5 * h, VecX(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  const VecX k6 =
      rhs(t + h,
          VecX(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));

  EmbeddedStep out;
  out.solution =
      z + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  out.endSlope = rhs(t + h, out.solution);  // FSAL stage
  out.errorEstimate = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 +
                           e7 * out.endSlope);
  out.denseStage = d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 +
                   d7 * out.endSlope;
  return out;
}

VecX dense_eval(const VecX& z0, const VecX& z1, const VecX& f0, const VecX& f1,
                const VecX& denseStage, double h, double theta) {
  const VecX diff = z1 - z0;
  const VecX c3v = h * f0 - diff;
  const VecX c4v = diff - h * f1 - c3v;
  const VecX c5v = h * denseStage;
  const double omt = 1.0 - theta;
  return z0 + theta * (diff + omt * (c3v + theta * (c4v + omt * c5v)));
}

}  // namespace detail

VecX step_rk4(const Rhs& rhs, double t, const VecX& z, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  const VecX k1 = rhs(t, z);
  const VecX k2 = rhs(t + 0.5 * h, VecX(z + 0.5 * h * k1));
  const VecX k3 = rhs(t + 0.5 * h, VecX(z + 0.5 * h * k2));
  const VecX k4 = rhs(t + h, VecX(z + h * k3));
  VecX out = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) {
    throw NonFiniteEvaluation("fixed step produced non-finite state");
  }
  return out;
}

Trajectory integrate_adaptive(const Rhs& rhs, const VecX& z0,
                              const IntegratorSettings& settings) {
  if (!(settings.rtol > 0.0) || !(settings.atol > 0.0) ||
      !(settings.sampleStep > 0.0) || !(settings.tFinal > 0.0)) {
    throw std::invalid_argument("integrator settings must be positive");
  }
  if (!z0.allFinite()) {
    throw NonFiniteEvaluation("initial state non-finite");
  }

  const long long nSamples =
      std::llround(settings.tFinal / settings.sampleStep);
  if (nSamples < 1) {
    throw std::invalid_argument("tFinal must cover at least one sample step");
  }
  const double tEnd = static_cast<double>(nSamples) * settings.sampleStep;

  Trajectory traj;
  traj.times.reserve(nSamples + 1);
  traj.states.reserve(nSamples + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(z0);

  if (settings.mode == IntegratorSettings::Mode::fixed) {
    VecX z = z0;
    for (long long kStep = 0; kStep < nSamples; ++kStep) {
      const double t = static_cast<double>(kStep) * settings.sampleStep;
      z = step_rk4(rhs, t, z, settings.sampleStep);
      traj.times.push_back(static_cast<double>(kStep + 1) *
                           settings.sampleStep);
      traj.states.push_back(z);
    }
    return traj;
  }

  double t = 0.0;
  VecX z = z0;
  VecX f = rhs(t, z);
  if (!f.allFinite()) {
    throw NonFiniteEvaluation("state derivative non-finite at the start");
  }

  double h = initial_step(rhs, t, z, f, settings.atol, settings.rtol,
                          std::min(settings.maxStep, tEnd));
  double errOld = 1e-4;
  long long nextSample = 1;

  while (nextSample <= nSamples) {
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t)) {
      throw StepSizeUnderflow("step size underflow at t = " +
                              std::to_string(t));
    }
    h = std::min({h, settings.maxStep, tEnd - t});

    const auto step = detail::dopri45_step(rhs, t, z, f, h);

    if (!step.solution.allFinite() || !step.errorEstimate.allFinite()) {
      h *= 0.25;  // retreat hard from a non-finite region
      continue;
    }

    const double err = error_norm(step.errorEstimate, z, step.solution,
                                  settings.atol, settings.rtol);

    if (err <= 1.0) {
      const double tNew = t + h;

      // Emit all grid points covered by this step via the dense output.
      while (nextSample <= nSamples) {
        const double ts = static_cast<double>(nextSample) * settings.sampleStep;
        if (ts > tNew + 1e-12 * std::max(1.0, tNew)) break;
        VecX sample;
        if (std::abs(ts - tNew) <= 1e-12 * std::max(1.0, tNew)) {
          sample = step.solution;
        } else {
          sample = detail::dense_eval(z, step.solution, f, step.endSlope,
                                      step.denseStage, h, (ts - t) / h);
        }
        traj.times.push_back(ts);
        traj.states.push_back(std::move(sample));
        ++nextSample;
      }

      t = tNew;
      z = step.solution;
      f = step.endSlope;

      const double errClamped = std::max(err, 1e-10);
      double scale = kSafety * std::pow(errClamped, -kExpo) *
                     std::pow(errOld, kBeta);
      scale = std::clamp(scale, kMinScale, kMaxScale);
      h *= scale;
      errOld = errClamped;
    } else {
      const double scale =
          std::clamp(kSafety * std::pow(err, -kExpo), kMinScale, 1.0);
      h *= scale;
    }
  }
  return traj;
}

}  // namespace vmbd
