#include "vmbd/cases.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {

constexpr double kGravity = 9.81;  // m/s^2
constexpr double kGimbalMargin = 0.01;

using std::numbers::pi;

Mat3 rotX(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rotY(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rotZ(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

// Intrinsic z-y-x rotation: yaw psi, then pitch theta, then roll phi.
Mat3 eulerRotation(double psi, double theta, double phi) {
  return rotZ(psi) * rotY(theta) * rotX(phi);
}

// Body-frame angular velocity per unit (psi-dot, theta-dot, phi-dot).
// Degenerates when the pitch approaches +-pi/2.
Mat3 eulerRateMap(double theta, double phi) {
  if (std::abs(theta) > pi / 2.0 - kGimbalMargin) {
    throw GimbalProximity("pitch angle too close to the kinematic singularity");
  }
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  Mat3 d;
  // clang-format off
  d <<   -st, 0.0, 1.0,
       ct * sp,  cp, 0.0,
       ct * cp, -sp, 0.0;
  // clang-format on
  return d;
}

IntegratorSettings defaultSettings(double sampleStep) {
  IntegratorSettings s;
  s.rtol = 1e-8;
  s.atol = 1e-10;
  s.sampleStep = sampleStep;
  s.tFinal = 50.0;
  return s;
}

}  // namespace

CaseStudy build_cart_pendulum(double motorTorque) {
  // Coordinates: link angles theta1, theta2 from the downward vertical, then
  // the ignorable cart position x. Cart of mass m1; the pendulum mass m2 is
  // carried by the two links, modeled as uniform thin rods of mass m2/2 each
  // (a pendulum with all mass at the tip leaves the opposite-rotation mode
  // massless and the dynamics undefined at theta1 = theta2). The wheel at
  // the tip forbids velocity transverse to the second link.
  const double m1 = 1.0;
  const double m2 = 0.5;
  const double l = 0.2;
  const double mRod = m2 / 2.0;
  const double rodInertia = mRod * l * l / 12.0;

  CoordinateLayout layout;
  layout.m = 3;
  layout.s = 1;
  layout.r = 1;
  layout.names = {"theta1", "theta2", "x"};

  std::vector<BodyKinematics> bodies;

  bodies.push_back(BodyKinematics::pointMass(
      m1, [](double, const VecX&) {
        MatX b = MatX::Zero(3, 3);
        b(0, 2) = 1.0;
        return b;
      }));

  // First link: pivot on the cart, center of mass at l/2 along the link.
  {
    BodyKinematics rod;
    rod.mass = mRod;
    rod.inertia = Vec3(0.0, rodInertia, rodInertia).asDiagonal();
    rod.linJac = [l](double, const VecX& q) {
      MatX b = MatX::Zero(3, 3);
      b(0, 0) = 0.5 * l * std::cos(q[0]);
      b(1, 0) = 0.5 * l * std::sin(q[0]);
      b(0, 2) = 1.0;
      return b;
    };
    rod.angJac = [](double, const VecX&) {
      MatX d = MatX::Zero(3, 3);
      d(2, 0) = 1.0;
      return d;
    };
    bodies.push_back(std::move(rod));
  }

  // Second link: hinged at the first link's tip.
  {
    BodyKinematics rod;
    rod.mass = mRod;
    rod.inertia = Vec3(0.0, rodInertia, rodInertia).asDiagonal();
    rod.linJac = [l](double, const VecX& q) {
      MatX b = MatX::Zero(3, 3);
      b(0, 0) = l * std::cos(q[0]);
      b(1, 0) = l * std::sin(q[0]);
      b(0, 1) = 0.5 * l * std::cos(q[1]);
      b(1, 1) = 0.5 * l * std::sin(q[1]);
      b(0, 2) = 1.0;
      return b;
    };
    rod.angJac = [](double, const VecX&) {
      MatX d = MatX::Zero(3, 3);
      d(2, 1) = 1.0;
      return d;
    };
    bodies.push_back(std::move(rod));
  }

  ForceModel forces;
  forces.potential = [mRod, l](double, const VecX& q) {
    return -kGravity * mRod * l *
           (1.5 * std::cos(q[0]) + 0.5 * std::cos(q[1]));
  };
  if (motorTorque != 0.0) {
    forces.ncForces = [motorTorque](double, const VecX&, const VecX&) {
      VecX f(3);
      f << motorTorque, -motorTorque, 0.0;
      return f;
    };
  }

  KinematicConstraint constraint;
  constraint.jac = [l](double, const VecX& q) {
    MatX a(1, 3);
    a << l * std::cos(q[0] - q[1]), l, 0.0;
    return a;
  };

  CaseStudy cs{.id = "cart",
               .system = MultibodySystem(layout, std::move(bodies), forces,
                                         constraint),
               .qvReduced = {},
               .qvFull = {},
               .initial = {},
               .settings = defaultSettings(0.01)};

  cs.qvReduced.rows = 1;
  cs.qvReduced.labels = {"relrate"};
  cs.qvReduced.jac = [](double, const VecX&) {
    MatX y(1, 3);
    y << -1.0, 1.0, 0.0;
    return y;
  };

  cs.qvFull.rows = 2;
  cs.qvFull.labels = {"relrate", "xdot"};
  cs.qvFull.jac = [](double, const VecX&) {
    MatX y(2, 3);
    y << 1.0, -1.0, 0.0, 0.0, 0.0, 1.0;
    return y;
  };

  cs.initial.t0 = 0.0;
  cs.initial.q = VecX(3);
  cs.initial.q << pi / 2.0, pi / 2.0, 4.0;
  cs.initial.qdot = VecX(3);
  cs.initial.qdot << 1.0, -1.0, 3.0;
  return cs;
}

CaseStudy build_three_body_spacecraft() {
  // Middle body oriented by intrinsic z-y-x angles, two uniform rectangular
  // panels hinged at the centers of the faces at +-a/2 along the body x
  // axis, hinge axes along body y, panel mass centers b/2 outboard of the
  // hinges. Translations X, Y, Z of the middle body's mass center come last
  // and are ignorable.
  const double mS = 100.0;
  const double mP = 10.0;
  const double halfBody = 1.0;   // a / 2
  const double panelArm = 1.0;   // b / 2
  const double panelB = 2.0;
  const double panelC = 2.0;

  Mat3 inertiaMid;
  // clang-format off
  inertiaMid << 67.0, -5.0, -2.0,
                -5.0, 67.0,  0.0,
                -2.0,  0.0, 67.0;
  // clang-format on
  const Mat3 inertiaPanel =
      (mP / 12.0) *
      Vec3(panelC * panelC, panelB * panelB, panelB * panelB + panelC * panelC)
          .asDiagonal();

  CoordinateLayout layout;
  layout.m = 8;
  layout.s = 3;
  layout.r = 0;
  layout.names = {"psi", "theta", "phi", "gamma1", "gamma2", "X", "Y", "Z"};

  const int m = layout.m;

  const auto eulerJac = [m](const VecX& q) {
    MatX d = MatX::Zero(3, m);
    d.leftCols(3) = eulerRateMap(q[1], q[2]);
    return d;
  };

  std::vector<BodyKinematics> bodies;

  {
    BodyKinematics mid;
    mid.mass = mS;
    mid.inertia = inertiaMid;
    mid.linJac = [m](double, const VecX&) {
      MatX b = MatX::Zero(3, m);
      b.rightCols(3).setIdentity();
      return b;
    };
    mid.angJac = [eulerJac](double, const VecX& q) { return eulerJac(q); };
    bodies.push_back(std::move(mid));
  }

  // side = +1 for the panel on the +x face, -1 for the -x face;
  // gammaIndex selects the hinge coordinate.
  const auto makePanel = [&](double side, int gammaIndex) {
    BodyKinematics panel;
    panel.mass = mP;
    panel.inertia = inertiaPanel;
    panel.linJac = [=](double, const VecX& q) {
      const double g = q[gammaIndex];
      const Mat3 r = eulerRotation(q[0], q[1], q[2]);
      const Vec3 com(side * (halfBody + panelArm * std::cos(g)), 0.0,
                     -side * panelArm * std::sin(g));
      const Vec3 dcom(-side * panelArm * std::sin(g), 0.0,
                      -side * panelArm * std::cos(g));
      MatX b = MatX::Zero(3, m);
      b.leftCols(3) = r * (-skew(com)) * eulerRateMap(q[1], q[2]);
      b.col(gammaIndex) = r * dcom;
      b.rightCols(3).setIdentity();
      return b;
    };
    panel.angJac = [=](double, const VecX& q) {
      const double g = q[gammaIndex];
      MatX d = MatX::Zero(3, m);
      d.leftCols(3) = rotY(-g) * eulerRateMap(q[1], q[2]);
      d(1, gammaIndex) = 1.0;  // hinge axis is body y
      return d;
    };
    return panel;
  };

  bodies.push_back(makePanel(+1.0, 3));
  bodies.push_back(makePanel(-1.0, 4));

  CaseStudy cs{.id = "tribody",
               .system = MultibodySystem(layout, std::move(bodies),
                                         ForceModel{}, KinematicConstraint{}),
               .qvReduced = {},
               .qvFull = {},
               .initial = {},
               .settings = defaultSettings(0.1)};

  cs.qvReduced.rows = 5;
  cs.qvReduced.labels = {"wx", "wy", "wz", "gamma1dot", "gamma2dot"};
  cs.qvReduced.jac = [eulerJac, m](double, const VecX& q) {
    MatX y = MatX::Zero(5, m);
    y.topRows(3) = eulerJac(q);
    y(3, 3) = 1.0;
    y(4, 4) = 1.0;
    return y;
  };

  cs.qvFull.rows = 8;
  cs.qvFull.labels = {"wx", "wy", "wz", "gamma1dot", "gamma2dot",
                      "Xdot", "Ydot", "Zdot"};
  cs.qvFull.jac = [eulerJac, m](double, const VecX& q) {
    MatX y = MatX::Zero(8, m);
    y.topRows(3) = eulerJac(q);
    y.bottomRightCorner(5, 5).setIdentity();
    return y;
  };

  cs.initial.t0 = 0.0;
  cs.initial.q = VecX(8);
  cs.initial.q << pi / 10.0, pi / 6.0, 0.03, 0.0, 0.0, 3.0, 3.0, 9.0;
  cs.initial.qdot = VecX(8);
  cs.initial.qdot << 0.3, 0.0, -0.3, 0.0, 0.2, 0.1, -0.3, -0.4;
  return cs;
}

CaseStudy build_boom_satellite() {
  // Cubic satellite with a massless boom along body +x from the face center;
  // rho is the deployed boom length carrying the tip mass. The actuator
  // force is an internal pair, so only the rho component of the generalized
  // forces is loaded and total linear momentum stays conserved.
  const double mSat = 2000.0;
  const double mTip = 1.0;
  const double side = 2.5;

  Mat3 inertiaSat;
  // clang-format off
  inertiaSat << 1400.0,   -5.0,   -8.0,
                  -5.0,  900.0,   -3.0,
                  -8.0,   -3.0, 1100.0;
  // clang-format on

  CoordinateLayout layout;
  layout.m = 7;
  layout.s = 3;
  layout.r = 0;
  layout.names = {"psi", "theta", "phi", "rho", "X", "Y", "Z"};
  const int m = layout.m;

  std::vector<BodyKinematics> bodies;

  {
    BodyKinematics sat;
    sat.mass = mSat;
    sat.inertia = inertiaSat;
    sat.linJac = [m](double, const VecX&) {
      MatX b = MatX::Zero(3, m);
      b.rightCols(3).setIdentity();
      return b;
    };
    sat.angJac = [m](double, const VecX& q) {
      MatX d = MatX::Zero(3, m);
      d.leftCols(3) = eulerRateMap(q[1], q[2]);
      return d;
    };
    bodies.push_back(std::move(sat));
  }

  bodies.push_back(BodyKinematics::pointMass(
      mTip, [side, m](double, const VecX& q) {
        const Mat3 r = eulerRotation(q[0], q[1], q[2]);
        const Vec3 tip(0.5 * side + q[3], 0.0, 0.0);
        MatX b = MatX::Zero(3, m);
        b.leftCols(3) = r * (-skew(tip)) * eulerRateMap(q[1], q[2]);
        b.col(3) = r.col(0);  // deployment direction, body x
        b.rightCols(3).setIdentity();
        return b;
      }));

  ForceModel forces;
  forces.ncForces = [m](double t, const VecX&, const VecX&) {
    VecX f = VecX::Zero(m);
    f[3] = -0.018 * std::sin(0.089 * t) + 0.012 * std::cos(0.0485 * t);
    return f;
  };

  CaseStudy cs{.id = "satellite",
               .system = MultibodySystem(layout, std::move(bodies), forces,
                                         KinematicConstraint{}),
               .qvReduced = {},
               .qvFull = {},
               .initial = {},
               .settings = defaultSettings(0.1)};

  cs.qvReduced.rows = 4;
  cs.qvReduced.labels = {"wx", "wy", "wz", "rhodot"};
  cs.qvReduced.jac = [m](double, const VecX& q) {
    MatX y = MatX::Zero(4, m);
    y.topLeftCorner(3, 3) = eulerRateMap(q[1], q[2]);
    y(3, 3) = 1.0;
    return y;
  };

  cs.qvFull.rows = 7;
  cs.qvFull.labels = {"wx", "wy", "wz", "rhodot", "Xdot", "Ydot", "Zdot"};
  cs.qvFull.jac = [m](double, const VecX& q) {
    MatX y = MatX::Zero(7, m);
    y.topLeftCorner(3, 3) = eulerRateMap(q[1], q[2]);
    y.bottomRightCorner(4, 4).setIdentity();
    return y;
  };

  cs.initial.t0 = 0.0;
  cs.initial.q = VecX(7);
  cs.initial.q << pi / 8.0, pi / 12.0, 0.08, 0.5, 0.0, 0.0, 0.0;
  cs.initial.qdot = VecX(7);
  cs.initial.qdot << -0.1, 0.05, -0.05, 0.0, 2.0, 1.0, 0.0;
  return cs;
}

CaseStudy build_case(const std::string& id) {
  if (id == "cart") return build_cart_pendulum();
  if (id == "tribody") return build_three_body_spacecraft();
  if (id == "satellite") return build_boom_satellite();
  throw std::invalid_argument("unknown case id: " + id);
}

}  // namespace vmbd
