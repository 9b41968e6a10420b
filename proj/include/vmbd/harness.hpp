#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vmbd/cases.hpp"
#include "vmbd/formulations.hpp"
#include "vmbd/metrics.hpp"

namespace vmbd {

std::string method_id(Method method);
std::optional<Method> parse_method(const std::string& id);
const std::vector<Method>& all_methods();

/// Builds the state-space bundle for one case and method, deriving the
/// conserved-momentum constraint from the case's initial state.
StateSpace make_state_space(const CaseStudy& cs, Method method);

/// Fills the reconstructed generalized velocities and the accumulated-work
/// channel of a freshly integrated trajectory.
void annotate_trajectory(Trajectory& traj, const StateSpace& ss);

struct MethodReport {
  std::string caseId;
  std::string methodId;
  int nStates = 0;
  int nEquations = 0;
  double wallSeconds = 0.0;
  SeriesNorm energyDrift;
  SeriesNorm kinematicResidual;
  SeriesNorm dynamicalResidual;
  SeriesNorm momentumDrift;
};

struct RunResult {
  MethodReport report;
  Trajectory trajectory;
};

/// Integrates one (case, method) pair at the given settings and computes the
/// conservation metrics. Wall time is measured around the integration only.
RunResult run_method(const CaseStudy& cs, Method method,
                     const IntegratorSettings& settings);

/// Runs all four methods at identical settings, optionally in parallel
/// (bounded by maxThreads; the VMBD_THREADS environment variable caps it
/// from outside).
std::vector<RunResult> run_all_methods(const CaseStudy& cs,
                                       const IntegratorSettings& settings,
                                       int maxThreads);

int thread_cap_from_env();

/// CSV schema: t,q1..qm,qd1..qdm,u1..uk,energy_drift,kin_residual,
/// dyn_residual,momentum_drift with columns that do not apply to the
/// formulation or the case omitted entirely. Values are full double
/// precision; files are written atomically.
void write_trajectory_csv(const std::string& path, const CaseStudy& cs,
                          const StateSpace& ss, const Trajectory& traj);

void write_report_json(const std::string& path, const MethodReport& report);
void write_compare_json(const std::string& path, const std::string& caseId,
                        const IntegratorSettings& settings,
                        const std::vector<MethodReport>& reports);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::vector<std::string> caseIds;        // empty means all
  bool perturbConstraint = false;          // negative control
  bool fdOrderOnly = false;                // run only the numdiff order check
  double equivalenceHorizon = 2.0;         // seconds
};

/// Runs the invariant suites (ignorable-set screening, quadratic-form
/// identity, velocity-map identities, initial-state consistency, energy
/// rate, short-horizon cross-method agreement, finite-difference order).
std::vector<CheckResult> run_verification(const VerifyOptions& options);

}  // namespace vmbd
