#include <doctest.h>

#include <cmath>
#include <vector>

#include "vmbd/errors.hpp"
#include "vmbd/integrate.hpp"

using namespace vmbd;

namespace {

const Rhs decay = [](double, const VecX& y) { return VecX(-y); };

VecX scalar(double v) {
  VecX out(1);
  out[0] = v;
  return out;
}

}  // namespace

TEST_CASE("exponential decay reaches 1/e at tight tolerance") {
  IntegratorSettings s;
  s.rtol = 1e-10;
  s.atol = 1e-12;
  s.tFinal = 1.0;
  s.sampleStep = 0.1;
  const Trajectory traj = integrate_adaptive(decay, scalar(1.0), s);
  CHECK(traj.times.size() == 11);
  CHECK(std::abs(traj.states.back()[0] - 0.36787944117144233) < 1e-9);
}

TEST_CASE("harmonic oscillator returns after one period") {
  const Rhs rhs = [](double, const VecX& y) {
    VecX dy(2);
    dy << y[1], -y[0];
    return dy;
  };
  IntegratorSettings s;
  s.rtol = 1e-10;
  s.atol = 1e-12;
  s.tFinal = 2.0 * M_PI;
  s.sampleStep = M_PI / 8.0;
  VecX y0(2);
  y0 << 1.0, 0.0;
  const Trajectory traj = integrate_adaptive(rhs, y0, s);
  CHECK(std::abs(traj.states.back()[0] - 1.0) < 1e-8);
  CHECK(std::abs(traj.states.back()[1]) < 1e-8);
}

TEST_CASE("global error scales linearly with the tolerance") {
  const double exact = std::exp(-1.0);
  std::vector<double> tols = {1e-6, 3e-8, 1e-9};
  std::vector<double> errs;
  for (double tol : tols) {
    IntegratorSettings s;
    s.rtol = tol;
    s.atol = tol * 1e-2;
    s.tFinal = 1.0;
    s.sampleStep = 1.0;
    const Trajectory traj = integrate_adaptive(decay, scalar(1.0), s);
    errs.push_back(std::abs(traj.states.back()[0] - exact));
  }
  // Least-squares slope of log(err) vs log(tol) should be near one.
  const double slope = std::log(errs.front() / errs.back()) /
                       std::log(tols.front() / tols.back());
  CHECK(slope >= 0.7);
  CHECK(errs.back() < 1e-7);
}

TEST_CASE("embedded pair advances at fifth order") {
  // March with fixed step sizes through the detail stepper and watch the
  // global error fall by ~2^5 per halving.
  const auto propagate = [](double h) {
    double t = 0.0;
    VecX y = scalar(1.0);
    VecX f = decay(t, y);
    const int n = static_cast<int>(std::llround(1.0 / h));
    for (int i = 0; i < n; ++i) {
      const auto step = detail::dopri45_step(decay, t, y, f, h);
      y = step.solution;
      f = step.endSlope;
      t += h;
    }
    return std::abs(y[0] - std::exp(-1.0));
  };
  const double e1 = propagate(1.0 / 16);
  const double e2 = propagate(1.0 / 32);
  const double e3 = propagate(1.0 / 64);
  const double order1 = std::log2(e1 / e2);
  const double order2 = std::log2(e2 / e3);
  CHECK(order1 >= 5.0);
  CHECK(order2 >= 5.0);
}

TEST_CASE("dense output does not perturb shared sample times") {
  const Rhs rhs = [](double t, const VecX& y) {
    VecX dy(1);
    dy[0] = std::cos(t) * y[0];
    return dy;
  };
  IntegratorSettings coarse;
  coarse.rtol = 1e-9;
  coarse.atol = 1e-11;
  coarse.tFinal = 10.0;
  coarse.sampleStep = 0.5;
  IntegratorSettings fine = coarse;
  fine.sampleStep = 0.1;

  const Trajectory a = integrate_adaptive(rhs, scalar(1.0), coarse);
  const Trajectory b = integrate_adaptive(rhs, scalar(1.0), fine);
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const std::size_t j = i * 5;  // shared grid points
    REQUIRE(std::abs(a.times[i] - b.times[j]) < 1e-12);
    CHECK(std::abs(a.states[i][0] - b.states[j][0]) <=
          5.0 * coarse.rtol * std::abs(a.states[i][0]) + 5.0 * coarse.atol);
  }
}

TEST_CASE("fixed-step mode steps exactly on the sample grid") {
  IntegratorSettings s;
  s.mode = IntegratorSettings::Mode::fixed;
  s.tFinal = 1.0;
  s.sampleStep = 0.25;
  const Trajectory traj = integrate_adaptive(decay, scalar(1.0), s);
  CHECK(traj.times.size() == 5);
  CHECK(std::abs(traj.states.back()[0] - std::exp(-1.0)) < 1e-4);
}

TEST_CASE("classical fourth-order step") {
  SUBCASE("zero slope keeps the state") {
    const Rhs rhs = [](double, const VecX& y) { return VecX(VecX::Zero(y.size())); };
    const VecX out = step_rk4(rhs, 0.0, scalar(2.5), 0.1);
    CHECK(out[0] == 2.5);
  }

  SUBCASE("constant slope integrates exactly") {
    const Rhs rhs = [](double, const VecX& y) {
      return VecX(VecX::Ones(y.size()));
    };
    const VecX out = step_rk4(rhs, 0.0, scalar(1.0), 0.1);
    CHECK(out[0] == doctest::Approx(1.1).epsilon(1e-15));
  }

  SUBCASE("one decay step lands within the Taylor remainder") {
    const VecX out = step_rk4(decay, 0.0, scalar(1.0), 0.1);
    CHECK(out[0] == doctest::Approx(0.9048375));
    CHECK(std::abs(out[0] - std::exp(-0.1)) < 8.3e-8);
  }
}

TEST_CASE("finite-time blow-up triggers a step-size underflow") {
  const Rhs blowup = [](double, const VecX& y) {
    VecX dy(1);
    dy[0] = y[0] * y[0];
    return dy;
  };
  IntegratorSettings s;
  s.tFinal = 2.0;  // solution escapes at t = 1
  s.sampleStep = 0.1;
  CHECK_THROWS_AS(integrate_adaptive(blowup, scalar(1.0), s), StepSizeUnderflow);
}

TEST_CASE("settings are validated") {
  IntegratorSettings s;
  s.rtol = -1.0;
  CHECK_THROWS_AS(integrate_adaptive(decay, scalar(1.0), s),
                  std::invalid_argument);
}
