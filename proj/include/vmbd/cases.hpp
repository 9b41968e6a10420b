#pragma once

#include <string>

#include "vmbd/integrate.hpp"
#include "vmbd/model.hpp"
#include "vmbd/quasivel.hpp"

namespace vmbd {

struct InitialState {
  double t0 = 0.0;
  VecX q;
  VecX qdot;
};

/// One built-in benchmark case: the system, the quasi-velocity choices for
/// the reduced and full pipelines, the published initial conditions, and the
/// default integration settings.
struct CaseStudy {
  std::string id;
  MultibodySystem system;
  QuasiVelocityDef qvReduced;  // p - s rows
  QuasiVelocityDef qvFull;     // p rows
  InitialState initial;
  IntegratorSettings settings;
  Vec3 momentumDirection = Vec3::UnitX();
};

/// Planar cart carrying a two-link pendulum whose tip wheel rolls without
/// side slip (one velocity constraint); the cart position is ignorable.
/// A nonzero motor torque acts equal-and-opposite on the two links and
/// disables the conserved-energy benchmark setup.
CaseStudy build_cart_pendulum(double motorTorque = 0.0);

/// Free-floating rigid body with two hinged panels; the three translation
/// coordinates are ignorable. Torque-free.
CaseStudy build_three_body_spacecraft();

/// Cubic satellite deploying a tip mass along a boom under a prescribed
/// internal force; translations ignorable, energy bookkeeping needs the
/// work integral.
CaseStudy build_boom_satellite();

/// Lookup by CLI identifier: "cart", "tribody", "satellite".
CaseStudy build_case(const std::string& id);

}  // namespace vmbd
