#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "vmbd/cases.hpp"
#include "vmbd/errors.hpp"
#include "vmbd/model.hpp"

using namespace vmbd;

TEST_CASE("free particle mass decomposition") {
  const MultibodySystem sys = fixtures::free_particle_2d(2.0, 0);
  const auto md = derive_mass_decomposition(sys, 0.0, VecX::Zero(2));
  CHECK((md.M - 2.0 * MatX::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(md.N.cwiseAbs().maxCoeff() == 0.0);
  CHECK(md.T0 == 0.0);
}

TEST_CASE("cart-bob oracle mass matrix from quadratic fit") {
  // Hand-coded velocities, fitted as a quadratic form in qdot, frozen values.
  const double m1 = 1.0, m2 = 0.5, l = 0.2;
  const MultibodySystem sys = fixtures::cart_bob(m1, m2, l, false, 0, true);

  VecX q(2);
  q << 0.0, 0.0;  // [x, theta], theta = 0

  const auto directT = [&](const VecX& qdot) {
    // cart: (xdot, 0); bob: (xdot + l c th thdot, l s th thdot)
    const double xdot = qdot[0], thdot = qdot[1], th = q[1];
    const double bx = xdot + l * std::cos(th) * thdot;
    const double by = l * std::sin(th) * thdot;
    return 0.5 * m1 * xdot * xdot + 0.5 * m2 * (bx * bx + by * by);
  };
  const fixtures::QuadraticFit fit = fixtures::fit_quadratic_form(directT, 2);

  MatX expected(2, 2);
  expected << 1.5, 0.1, 0.1, 0.02;
  CHECK((fit.M - expected).cwiseAbs().maxCoeff() < 1e-14);

  const auto md = derive_mass_decomposition(sys, 0.0, q);
  CHECK((md.M - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((md.M - fit.M).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(md.N.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(md.T0 == doctest::Approx(0.0));
}

TEST_CASE("cart-pendulum case satisfies the quadratic-form identity") {
  const CaseStudy cs = build_cart_pendulum();
  const double t = 0.0;
  const VecX& q = cs.initial.q;
  const VecX& qdot = cs.initial.qdot;

  // Independent evaluation: velocities of the three bodies written out by
  // hand for links modeled as uniform rods of half the pendulum mass.
  const double l = 0.2, m1 = 1.0, mRod = 0.25;
  const double th1 = q[0], th2 = q[1];
  const double w1 = qdot[0], w2 = qdot[1], xd = qdot[2];
  const double rodI = mRod * l * l / 12.0;

  const double cartT = 0.5 * m1 * xd * xd;
  const double g1x = xd + 0.5 * l * std::cos(th1) * w1;
  const double g1y = 0.5 * l * std::sin(th1) * w1;
  const double rod1T =
      0.5 * mRod * (g1x * g1x + g1y * g1y) + 0.5 * rodI * w1 * w1;
  const double g2x = xd + l * std::cos(th1) * w1 + 0.5 * l * std::cos(th2) * w2;
  const double g2y = l * std::sin(th1) * w1 + 0.5 * l * std::sin(th2) * w2;
  const double rod2T =
      0.5 * mRod * (g2x * g2x + g2y * g2y) + 0.5 * rodI * w2 * w2;
  const double directT = cartT + rod1T + rod2T;

  const double viaDecomposition = kinetic_energy(cs.system, t, q, qdot);
  CHECK(std::abs(directT - viaDecomposition) <= 1e-12 * (1.0 + directT));
}

TEST_CASE("generalized forces") {
  SUBCASE("zero force model gives zero forces") {
    const MultibodySystem sys = fixtures::free_particle_2d(2.0, 0);
    const VecX Q = generalized_forces(sys, 0.0, VecX::Zero(2), VecX::Zero(2));
    CHECK(Q.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("cart motor torque loads the links equal and opposite") {
    const CaseStudy cs = build_cart_pendulum(0.7);
    VecX qnc = cs.system.ncForces(0.0, cs.initial.q, cs.initial.qdot);
    CHECK(qnc[0] == doctest::Approx(0.7));
    CHECK(qnc[1] == doctest::Approx(-0.7));
    CHECK(qnc[2] == 0.0);
  }

  SUBCASE("boom force magnitude at t = 0") {
    const CaseStudy cs = build_boom_satellite();
    const VecX qnc = cs.system.ncForces(0.0, cs.initial.q, cs.initial.qdot);
    CHECK(qnc[3] == doctest::Approx(0.012));
    for (int i : {0, 1, 2, 4, 5, 6}) CHECK(qnc[i] == 0.0);
  }

  SUBCASE("potential gradient enters with a minus sign") {
    const MultibodySystem sys = fixtures::free_particle_2d(
        1.0, 0, [](double, const VecX& q) { return 3.0 * q[0]; });
    const VecX Q = generalized_forces(sys, 0.0, VecX::Zero(2), VecX::Zero(2));
    CHECK(Q[0] == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(std::abs(Q[1]) < 1e-9);
  }
}

TEST_CASE("kinematic constraint evaluation") {
  const CaseStudy cs = build_cart_pendulum();

  SUBCASE("row at the initial configuration") {
    const MatX a = cs.system.constraintJac(0.0, cs.initial.q);
    CHECK(a(0, 0) == doctest::Approx(0.2));
    CHECK(a(0, 1) == doctest::Approx(0.2));
    CHECK(a(0, 2) == 0.0);
  }

  SUBCASE("published initial rates are consistent") {
    const VecX res =
        kinematic_constraint_eval(cs.system, 0.0, cs.initial.q, cs.initial.qdot);
    CHECK(std::abs(res[0]) < 1e-15);
  }

  SUBCASE("null-space rates give zero residual") {
    VecX qdot(3);
    qdot << 0.4, -0.4 * std::cos(cs.initial.q[0] - cs.initial.q[1]), -2.0;
    const VecX res =
        kinematic_constraint_eval(cs.system, 0.0, cs.initial.q, qdot);
    CHECK(std::abs(res[0]) < 1e-15);
  }

  SUBCASE("unconstrained system returns an empty residual") {
    const MultibodySystem sys = fixtures::free_particle_2d(1.0, 0);
    CHECK(kinematic_constraint_eval(sys, 0.0, VecX::Zero(2), VecX::Zero(2))
              .size() == 0);
  }
}

TEST_CASE("massless internal mode is rejected as a singular mass matrix") {
  const MultibodySystem sys = fixtures::degenerate_two_link_cart();
  VecX q(3);
  q << 1.0, 1.0, 0.0;  // theta1 = theta2 collapses the rank
  CHECK_THROWS_AS(derive_mass_decomposition(sys, 0.0, q), SingularMass);
}

TEST_CASE("non-finite provider output is reported") {
  std::vector<BodyKinematics> bodies;
  bodies.push_back(BodyKinematics::pointMass(1.0, [](double, const VecX&) {
    MatX b = MatX::Zero(3, 1);
    b(0, 0) = std::numeric_limits<double>::quiet_NaN();
    return b;
  }));
  CoordinateLayout layout;
  layout.m = 1;
  const MultibodySystem sys(layout, std::move(bodies), ForceModel{},
                            KinematicConstraint{});
  CHECK_THROWS_AS(derive_mass_decomposition(sys, 0.0, VecX::Zero(1)),
                  NonFiniteEvaluation);
}

TEST_CASE("mass terms are symmetric and positive definite on random states") {
  auto rng = fixtures::seeded_rng(123);
  const CaseStudy cs = build_three_body_spacecraft();
  for (int i = 0; i < 25; ++i) {
    VecX q = cs.initial.q + fixtures::random_vector(rng, 8, 0.4);
    const auto md = derive_mass_decomposition(cs.system, 0.0, q);
    CHECK((md.M - md.M.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::LLT<MatX> llt(md.M);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("mass terms are independent of the ignorable coordinates") {
  for (const auto& builder :
       {build_cart_pendulum(), build_three_body_spacecraft(),
        build_boom_satellite()}) {
    const int m = builder.system.layout().m;
    const int s = builder.system.layout().s;
    const auto base =
        derive_mass_decomposition(builder.system, 0.0, builder.initial.q);
    for (int j = m - s; j < m; ++j) {
      VecX q = builder.initial.q;
      q[j] += 1.7;
      const auto md = derive_mass_decomposition(builder.system, 0.0, q);
      CHECK((md.M - base.M).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((md.N - base.N).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(md.T0 - base.T0) <= 1e-10);
    }
  }
}
