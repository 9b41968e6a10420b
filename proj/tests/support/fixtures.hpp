#pragma once

// Shared fixture systems for the unit suites. Everything here is hand-coded
// from first principles so it can serve as an independent cross-check of the
// library's assembly paths.

#include <cmath>
#include <functional>
#include <random>

#include "vmbd/model.hpp"

namespace fixtures {

using vmbd::BodyKinematics;
using vmbd::CoordinateLayout;
using vmbd::ForceModel;
using vmbd::KinematicConstraint;
using vmbd::Mat3;
using vmbd::MatX;
using vmbd::MultibodySystem;
using vmbd::Vec3;
using vmbd::VecX;

/// Free particle in the plane, q = [x, y]; s of the coordinates may be
/// declared ignorable (they all qualify).
inline MultibodySystem free_particle_2d(double mass, int s,
                                        vmbd::ScalarFn potential = nullptr) {
  CoordinateLayout layout;
  layout.m = 2;
  layout.s = s;
  layout.r = 0;
  layout.names = {"x", "y"};
  std::vector<BodyKinematics> bodies;
  bodies.push_back(BodyKinematics::pointMass(mass, [](double, const VecX&) {
    MatX b = MatX::Zero(3, 2);
    b(0, 0) = 1.0;
    b(1, 1) = 1.0;
    return b;
  }));
  ForceModel forces;
  forces.potential = std::move(potential);
  return MultibodySystem(layout, std::move(bodies), forces,
                         KinematicConstraint{});
}

/// Cart of mass m1 sliding along x with a point-mass pendulum bob of mass m2
/// on a rigid massless rod of length l, angle from the downward vertical.
/// xLast selects the coordinate order: [theta, x] (x ignorable-capable) or
/// [x, theta].
inline MultibodySystem cart_bob(double m1, double m2, double l, bool xLast,
                                int s, bool withGravity) {
  CoordinateLayout layout;
  layout.m = 2;
  layout.s = s;
  layout.r = 0;
  layout.names = xLast ? std::vector<std::string>{"theta", "x"}
                       : std::vector<std::string>{"x", "theta"};
  const int xCol = xLast ? 1 : 0;
  const int thCol = xLast ? 0 : 1;

  std::vector<BodyKinematics> bodies;
  bodies.push_back(
      BodyKinematics::pointMass(m1, [xCol](double, const VecX&) {
        MatX b = MatX::Zero(3, 2);
        b(0, xCol) = 1.0;
        return b;
      }));
  bodies.push_back(
      BodyKinematics::pointMass(m2, [xCol, thCol, l](double, const VecX& q) {
        const double th = q[thCol];
        MatX b = MatX::Zero(3, 2);
        b(0, xCol) = 1.0;
        b(0, thCol) = l * std::cos(th);
        b(1, thCol) = l * std::sin(th);
        return b;
      }));

  ForceModel forces;
  if (withGravity) {
    forces.potential = [m2, l, thCol](double, const VecX& q) {
      return -m2 * 9.81 * l * std::cos(q[thCol]);
    };
  }
  return MultibodySystem(layout, std::move(bodies), forces,
                         KinematicConstraint{});
}

/// Cart with a two-link pendulum whose links are massless and whose only
/// pendulum mass sits at the tip. The opposite-rotation link mode carries no
/// kinetic energy, so the assembled mass matrix is singular whenever
/// theta1 = theta2. Kept as a negative-control fixture.
inline MultibodySystem degenerate_two_link_cart() {
  CoordinateLayout layout;
  layout.m = 3;
  layout.s = 1;
  layout.r = 1;
  layout.names = {"theta1", "theta2", "x"};
  const double l = 0.2;

  std::vector<BodyKinematics> bodies;
  bodies.push_back(BodyKinematics::pointMass(1.0, [](double, const VecX&) {
    MatX b = MatX::Zero(3, 3);
    b(0, 2) = 1.0;
    return b;
  }));
  bodies.push_back(BodyKinematics::pointMass(0.5, [l](double, const VecX& q) {
    MatX b = MatX::Zero(3, 3);
    b(0, 0) = l * std::cos(q[0]);
    b(1, 0) = l * std::sin(q[0]);
    b(0, 1) = l * std::cos(q[1]);
    b(1, 1) = l * std::sin(q[1]);
    b(0, 2) = 1.0;
    return b;
  }));

  KinematicConstraint constraint;
  constraint.jac = [l](double, const VecX& q) {
    MatX a(1, 3);
    a << l * std::cos(q[0] - q[1]), l, 0.0;
    return a;
  };
  return MultibodySystem(layout, std::move(bodies), ForceModel{}, constraint);
}

inline Mat3 rotY(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

/// Body-frame angular rates per unit (psi-dot, theta-dot, phi-dot) for the
/// intrinsic z-y-x sequence, written out independently of the library.
inline Mat3 euler_zyx_rate_map(double theta, double phi) {
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

/// Torque-free rigid body oriented by z-y-x angles, no translation.
inline MultibodySystem free_rigid_body(const Mat3& inertia) {
  CoordinateLayout layout;
  layout.m = 3;
  layout.s = 0;
  layout.r = 0;
  layout.names = {"psi", "theta", "phi"};

  std::vector<BodyKinematics> bodies;
  BodyKinematics body;
  body.mass = 1.0;
  body.inertia = inertia;
  body.linJac = [](double, const VecX&) { return MatX::Zero(3, 3); };
  body.angJac = [](double, const VecX& q) {
    return MatX(euler_zyx_rate_map(q[1], q[2]));
  };
  bodies.push_back(std::move(body));
  return MultibodySystem(layout, std::move(bodies), ForceModel{},
                         KinematicConstraint{});
}

/// Deliberately awkward but kinematically consistent single body with
/// nonzero velocity biases and explicit time dependence: orientation
/// R = Rz(q1 + 0.3 t) Ry(0.5 q2), mass center at
/// (0.4 q2, 0.1 sin q1, 0.2 t). Exercises every bias and transport path.
inline MultibodySystem biased_body_system(bool withForcing) {
  CoordinateLayout layout;
  layout.m = 2;
  layout.s = 0;
  layout.r = 0;
  layout.names = {"q1", "q2"};

  std::vector<BodyKinematics> bodies;
  BodyKinematics body;
  body.mass = 1.7;
  body.inertia = Vec3(0.2, 0.3, 0.4).asDiagonal();
  body.linJac = [](double, const VecX& q) {
    MatX b = MatX::Zero(3, 2);
    b(0, 1) = 0.4;
    b(1, 0) = 0.1 * std::cos(q[0]);
    return b;
  };
  body.linBias = [](double, const VecX&) { return Vec3(0.0, 0.0, 0.2); };
  // omega_body = alphadot * Ry(-beta) z + betadot * y with
  // alpha = q1 + 0.3 t, beta = 0.5 q2.
  body.angJac = [](double, const VecX& q) {
    const double beta = 0.5 * q[1];
    MatX d = MatX::Zero(3, 2);
    d.col(0) = Vec3(-std::sin(beta), 0.0, std::cos(beta));
    d(1, 1) = 0.5;
    return d;
  };
  body.angBias = [](double, const VecX& q) {
    const double beta = 0.5 * q[1];
    return Vec3(-0.3 * std::sin(beta), 0.0, 0.3 * std::cos(beta));
  };
  bodies.push_back(std::move(body));

  ForceModel forces;
  forces.potential = [](double, const VecX& q) {
    return 0.25 * q[0] * q[0] + 0.1 * std::cos(q[1]);
  };
  if (withForcing) {
    forces.ncForces = [](double t, const VecX&, const VecX& qdot) {
      VecX f(2);
      f << 0.1 * std::sin(t) - 0.05 * qdot[0], -0.2 * qdot[1];
      return f;
    };
  }
  return MultibodySystem(layout, std::move(bodies), forces,
                         KinematicConstraint{});
}

/// The biased body under one rheonomic velocity constraint
///   qdot1 + (0.4 + 0.1 sin q1) qdot2 + 0.2 cos(0.7 t) = 0,
/// exercising the nonzero constraint-bias paths of every formulation.
inline MultibodySystem biased_body_constrained(bool withForcing) {
  MultibodySystem base = biased_body_system(withForcing);
  CoordinateLayout layout = base.layout();
  layout.r = 1;
  KinematicConstraint constraint;
  constraint.jac = [](double, const VecX& q) {
    MatX a(1, 2);
    a << 1.0, 0.4 + 0.1 * std::sin(q[0]);
    return a;
  };
  constraint.bias = [](double t, const VecX&) {
    VecX b(1);
    b[0] = 0.2 * std::cos(0.7 * t);
    return b;
  };
  return MultibodySystem(layout, base.bodies(), base.forces(), constraint);
}

/// Exact recovery of a quadratic form T(v) = 1/2 v'Mv + v'N + T0 from point
/// evaluations; the fit is algebraically exact for quadratics, so it serves
/// as an assembly-free oracle for the mass decomposition.
struct QuadraticFit {
  MatX M;
  VecX N;
  double T0 = 0.0;
};

inline QuadraticFit fit_quadratic_form(
    const std::function<double(const VecX&)>& T, int m) {
  QuadraticFit fit;
  fit.M = MatX::Zero(m, m);
  fit.N = VecX::Zero(m);
  fit.T0 = T(VecX::Zero(m));
  for (int i = 0; i < m; ++i) {
    VecX ei = VecX::Zero(m);
    ei[i] = 1.0;
    const double tp = T(ei);
    const double tm = T(VecX(-ei));
    fit.N[i] = 0.5 * (tp - tm);
    fit.M(i, i) = tp + tm - 2.0 * fit.T0;
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      VecX eij = VecX::Zero(m);
      eij[i] = 1.0;
      eij[j] = 1.0;
      VecX ei = VecX::Zero(m);
      ei[i] = 1.0;
      VecX ej = VecX::Zero(m);
      ej[j] = 1.0;
      fit.M(i, j) = T(eij) - T(ei) - T(ej) + fit.T0;
      fit.M(j, i) = fit.M(i, j);
    }
  }
  return fit;
}

inline std::mt19937 seeded_rng(unsigned seed) { return std::mt19937(seed); }

inline VecX random_vector(std::mt19937& rng, int n, double scale) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * unit(rng);
  return v;
}

}  // namespace fixtures
