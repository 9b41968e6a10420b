#include <doctest.h>

#include <cmath>

#include "vmbd/errors.hpp"
#include "vmbd/numdiff.hpp"

using namespace vmbd;

TEST_CASE("constant matrix has exactly zero partials") {
  const MatrixFn f = [](double, const VecX&) {
    MatX m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    return m;
  };
  VecX q(3);
  q << 0.3, -1.2, 7.0;
  const MatrixPartials p = matrix_function_partials(f, 0.5, q);
  CHECK(p.wrtTime.cwiseAbs().maxCoeff() == 0.0);
  for (const MatX& d : p.wrtCoord) {
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("polynomial coordinate derivative") {
  const MatrixFn f = [](double, const VecX& q) {
    MatX m(1, 1);
    m(0, 0) = q[0] * q[0];
    return m;
  };
  VecX q(1);
  q << 3.0;
  const MatrixPartials p = matrix_function_partials(f, 0.0, q);
  CHECK(std::abs(p.wrtCoord[0](0, 0) - 6.0) < 1e-9);
}

TEST_CASE("time derivative of sin t at zero") {
  const MatrixFn f = [](double t, const VecX&) {
    MatX m(1, 1);
    m(0, 0) = std::sin(t);
    return m;
  };
  const MatrixPartials p = matrix_function_partials(f, 0.0, VecX::Zero(1));
  CHECK(std::abs(p.wrtTime(0, 0) - 1.0) < 1e-9);
}

TEST_CASE("halving the step cuts the central-difference error at least 4x") {
  const VectorFn f = [](double, const VecX& q) {
    VecX v(1);
    v[0] = std::exp(std::sin(q[0]));
    return v;
  };
  VecX q(1);
  q << 0.4;
  const double exact = std::cos(0.4) * std::exp(std::sin(0.4));

  const double h = 1e-2;
  const double errH = std::abs(central_difference(f, 0.0, q, 0, h)[0] - exact);
  const double errH2 =
      std::abs(central_difference(f, 0.0, q, 0, h / 2.0)[0] - exact);
  CHECK(errH / errH2 >= 4.0);

  // The policy's extrapolated estimate gains at least the same factor again.
  const auto richardson = [&](double step) {
    return (4.0 * central_difference(f, 0.0, q, 0, step / 2.0)[0] -
            central_difference(f, 0.0, q, 0, step)[0]) /
           3.0;
  };
  const double rH = std::abs(richardson(h) - exact);
  const double rH2 = std::abs(richardson(h / 2.0) - exact);
  CHECK(rH / rH2 >= 4.0);
}

TEST_CASE("per-coordinate steps scale with magnitude") {
  CHECK(derivative_step(0.0) == doctest::Approx(derivative_step(0.5)));
  CHECK(derivative_step(100.0) == doctest::Approx(100.0 * derivative_step(1.0)));
}

TEST_CASE("non-finite probes are reported") {
  const MatrixFn f = [](double, const VecX& q) {
    MatX m(1, 1);
    m(0, 0) = q[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : q[0];
    return m;
  };
  VecX q(1);
  q << 1.0;  // probes straddle the NaN region
  CHECK_THROWS_AS(matrix_function_partials(f, 0.0, q), NonFiniteEvaluation);
}

TEST_CASE("vector bundle partials match per-entry matrix partials") {
  const VectorFn f = [](double t, const VecX& q) {
    VecX v(3);
    v << std::sin(q[0]) * t, q[1] * q[1], std::cos(q[0] - q[1]);
    return v;
  };
  VecX q(2);
  q << 0.8, -0.4;
  const VectorPartials p = vector_function_partials(f, 1.3, q);

  CHECK(std::abs(p.wrtTime[0] - std::sin(0.8)) < 1e-9);
  CHECK(std::abs(p.wrtCoord(0, 0) - 1.3 * std::cos(0.8)) < 1e-9);
  CHECK(std::abs(p.wrtCoord(1, 1) - 2.0 * (-0.4)) < 1e-9);
  CHECK(std::abs(p.wrtCoord(2, 0) + std::sin(1.2)) < 1e-9);
  CHECK(std::abs(p.wrtCoord(2, 1) - std::sin(1.2)) < 1e-9);
}
