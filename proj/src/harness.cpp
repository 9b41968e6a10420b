#include "vmbd/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vmbd/errors.hpp"
#include "vmbd/numdiff.hpp"

namespace vmbd {

namespace {

using nlohmann::ordered_json;

const std::map<std::string, Method>& method_table() {
  static const std::map<std::string, Method> table = {
      {"lagrange", Method::lagrange},
      {"maggi", Method::maggi},
      {"kane", Method::kane},
      {"volterra-reduced", Method::volterra_reduced},
  };
  return table;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

ordered_json norm_json(const SeriesNorm& n) {
  return ordered_json{{"maxAbs", n.maxAbs},
                      {"rms", n.rms},
                      {"relMaxAbs", n.relMaxAbs},
                      {"relRms", n.relRms}};
}

ordered_json report_json(const MethodReport& r) {
  return ordered_json{
      {"case", r.caseId},
      {"method", r.methodId},
      {"n_states", r.nStates},
      {"n_equations", r.nEquations},
      {"wall_seconds", r.wallSeconds},
      {"norms",
       ordered_json{{"energy_drift", norm_json(r.energyDrift)},
                    {"kinematic_residual", norm_json(r.kinematicResidual)},
                    {"dynamical_residual", norm_json(r.dynamicalResidual)},
                    {"momentum_drift", norm_json(r.momentumDrift)}}}};
}

DynamicalConstraint case_constraint(const CaseStudy& cs) {
  if (cs.system.layout().s == 0) {
    return DynamicalConstraint::none(cs.system.layout().m);
  }
  return DynamicalConstraint::fromInitialState(cs.system, cs.initial.t0,
                                               cs.initial.q, cs.initial.qdot);
}

}  // namespace

std::string method_id(Method method) {
  for (const auto& [id, m] : method_table()) {
    if (m == method) return id;
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& id) {
  const auto it = method_table().find(id);
  if (it == method_table().end()) return std::nullopt;
  return it->second;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      Method::lagrange, Method::maggi, Method::kane, Method::volterra_reduced};
  return methods;
}

StateSpace make_state_space(const CaseStudy& cs, Method method) {
  switch (method) {
    case Method::lagrange:
      return StateSpace(cs.system, method, QuasiVelocityDef{},
                        DynamicalConstraint::none(cs.system.layout().m));
    case Method::maggi:
    case Method::kane:
      return StateSpace(cs.system, method, cs.qvFull,
                        DynamicalConstraint::none(cs.system.layout().m));
    case Method::volterra_reduced:
      return StateSpace(cs.system, method, cs.qvReduced, case_constraint(cs));
  }
  throw std::invalid_argument("unknown method");
}

void annotate_trajectory(Trajectory& traj, const StateSpace& ss) {
  const std::size_t n = traj.times.size();
  traj.qdots.resize(n);
  traj.work.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    traj.qdots[i] = ss.velocities(traj.times[i], traj.states[i]);
    traj.work[i] = ss.work(traj.states[i]);
  }
}

RunResult run_method(const CaseStudy& cs, Method method,
                     const IntegratorSettings& settings) {
  const StateSpace ss = make_state_space(cs, method);
  const VecX z0 = ss.initialState(cs.initial.t0, cs.initial.q, cs.initial.qdot);

  const auto rhs = [&ss](double t, const VecX& z) { return ss.rhs(t, z); };

  const auto start = std::chrono::steady_clock::now();
  Trajectory traj = integrate_adaptive(rhs, z0, settings);
  const auto stop = std::chrono::steady_clock::now();

  annotate_trajectory(traj, ss);

  const DynamicalConstraint dc = case_constraint(cs);
  const EnergyErrorSeries energy = energy_error_series(cs.system, traj);
  const ConservationSeries cons = conservation_error_series(
      cs.system, dc, traj, cs.momentumDirection);

  RunResult out{.report = {}, .trajectory = std::move(traj)};
  out.report.caseId = cs.id;
  out.report.methodId = method_id(method);
  const MethodCard card = method_card(method, cs.system);
  out.report.nStates = card.nStates;
  out.report.nEquations = card.nEquations;
  out.report.wallSeconds =
      std::chrono::duration<double>(stop - start).count();
  out.report.energyDrift = series_norm(energy.drift, energy.initial);
  out.report.kinematicResidual = series_norm(cons.kinematicResidual);
  out.report.dynamicalResidual = series_norm(cons.dynamicalResidual);
  out.report.momentumDrift =
      series_norm(cons.momentumDrift, cons.initialMomentum);
  return out;
}

int thread_cap_from_env() {
  const char* env = std::getenv("VMBD_THREADS");
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  int cap = std::min(hw, 4);
  if (env != nullptr) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) cap = parsed;
  }
  return cap;
}

std::vector<RunResult> run_all_methods(const CaseStudy& cs,
                                       const IntegratorSettings& settings,
                                       int maxThreads) {
  const auto& methods = all_methods();
  std::vector<RunResult> results(methods.size(),
                                 RunResult{.report = {}, .trajectory = {}});
  if (maxThreads <= 1) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      results[i] = run_method(cs, methods[i], settings);
    }
    return results;
  }
  std::vector<std::future<RunResult>> futures(methods.size());
  std::size_t next = 0;
  while (next < methods.size()) {
    const std::size_t batch =
        std::min<std::size_t>(maxThreads, methods.size() - next);
    for (std::size_t i = 0; i < batch; ++i) {
      const Method m = methods[next + i];
      futures[next + i] = std::async(std::launch::async, [&cs, m, &settings] {
        return run_method(cs, m, settings);
      });
    }
    for (std::size_t i = 0; i < batch; ++i) {
      results[next + i] = futures[next + i].get();
    }
    next += batch;
  }
  return results;
}

void write_trajectory_csv(const std::string& path, const CaseStudy& cs,
                          const StateSpace& ss, const Trajectory& traj) {
  const int m = cs.system.layout().m;
  const int k = ss.quasiCount();
  const bool hasKin = cs.system.layout().r > 0;
  const bool hasDyn = cs.system.layout().s > 0;

  const DynamicalConstraint dc = case_constraint(cs);
  const EnergyErrorSeries energy = energy_error_series(cs.system, traj);
  const ConservationSeries cons = conservation_error_series(
      cs.system, dc, traj, cs.momentumDirection);

  std::ostringstream out;
  out << "t";
  for (int i = 1; i <= m; ++i) out << ",q" << i;
  for (int i = 1; i <= m; ++i) out << ",qd" << i;
  for (int i = 1; i <= k; ++i) out << ",u" << i;
  out << ",energy_drift";
  if (hasKin) out << ",kin_residual";
  if (hasDyn) out << ",dyn_residual";
  out << ",momentum_drift\n";

  for (std::size_t row = 0; row < traj.times.size(); ++row) {
    out << fmt_full(traj.times[row]);
    const VecX q = traj.states[row].head(m);
    for (int i = 0; i < m; ++i) out << ',' << fmt_full(q[i]);
    for (int i = 0; i < m; ++i) out << ',' << fmt_full(traj.qdots[row][i]);
    if (k > 0) {
      const VecX u = traj.states[row].segment(m, k);
      for (int i = 0; i < k; ++i) out << ',' << fmt_full(u[i]);
    }
    out << ',' << fmt_full(energy.drift[row]);
    if (hasKin) out << ',' << fmt_full(cons.kinematicResidual[row]);
    if (hasDyn) out << ',' << fmt_full(cons.dynamicalResidual[row]);
    out << ',' << fmt_full(cons.momentumDrift[row]) << '\n';
  }
  atomic_write(path, out.str());
}

void write_report_json(const std::string& path, const MethodReport& report) {
  atomic_write(path, report_json(report).dump(2) + "\n");
}

void write_compare_json(const std::string& path, const std::string& caseId,
                        const IntegratorSettings& settings,
                        const std::vector<MethodReport>& reports) {
  ordered_json doc{
      {"case", caseId},
      {"settings",
       ordered_json{{"rtol", settings.rtol},
                    {"atol", settings.atol},
                    {"sample_step", settings.sampleStep},
                    {"t_final", settings.tFinal}}},
      {"methods", ordered_json::array()}};
  for (const auto& r : reports) doc["methods"].push_back(report_json(r));
  atomic_write(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

namespace {

struct CheckList {
  std::vector<CheckResult> results;

  void add(const std::string& name, bool passed, const std::string& detail) {
    results.push_back({name, passed, detail});
  }

  // Runs one check body; a thrown library error fails the check by name
  // instead of aborting the whole suite.
  template <typename Fn>
  void guarded(const std::string& name, Fn&& body) {
    try {
      body(name);
    } catch (const Error& e) {
      add(name, false, e.what());
    }
  }
};

std::vector<StateSample> workspace_samples(const CaseStudy& cs, int count,
                                           unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, 5.0);
  std::vector<StateSample> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    StateSample s;
    s.t = time(rng);
    s.q = cs.initial.q;
    s.qdot = cs.initial.qdot;
    for (Eigen::Index j = 0; j < s.q.size(); ++j) {
      s.q[j] += 0.4 * unit(rng);
      s.qdot[j] += 0.5 * unit(rng);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

double direct_kinetic_energy(const MultibodySystem& sys, double t,
                             const VecX& q, const VecX& qdot) {
  double T = 0.0;
  for (const auto& body : sys.bodies()) {
    const Vec3 v = body.linJac(t, q) * qdot +
                   (body.linBias ? body.linBias(t, q) : Vec3::Zero());
    const Vec3 w =
        (body.angJac ? body.angJac(t, q) * qdot : Vec3::Zero().eval()) +
        (body.angBias ? body.angBias(t, q) : Vec3::Zero());
    T += 0.5 * body.mass * v.squaredNorm() + 0.5 * w.dot(body.inertia * w);
  }
  return T;
}

CaseStudy perturb_constraint_row(const CaseStudy& cs) {
  CaseStudy bad = cs;
  const KinematicConstraint original = cs.system.constraint();
  KinematicConstraint corrupted;
  corrupted.jac = [original](double t, const VecX& q) {
    MatX a = original.jac(t, q);
    a(0, 0) *= 1.01;  // deliberately inconsistent row
    return a;
  };
  corrupted.bias = original.bias;
  bad.system = MultibodySystem(cs.system.layout(), cs.system.bodies(),
                               cs.system.forces(), corrupted);
  return bad;
}

void verify_case(CheckList& list, const CaseStudy& cs,
                 const std::vector<int>& expectedIgnorable,
                 double equivalenceHorizon) {
  const MultibodySystem& sys = cs.system;
  const int m = sys.layout().m;
  const int s = sys.layout().s;
  const std::string prefix = cs.id + ": ";

  // Ignorable-coordinate screening.
  list.guarded(prefix + "ignorable-coordinate screening", [&](const std::string& name) {
    const auto samples = workspace_samples(cs, 24, 20240901);
    const Definition1Report rep = verify_definition1(sys, samples);
    const std::vector<int> accepted = rep.acceptedIndices();
    const bool exact = accepted == expectedIgnorable;
    std::ostringstream detail;
    detail << "accepted {";
    for (int idx : accepted) detail << ' ' << sys.layout().names[idx];
    detail << " }";
    list.add(name, exact, detail.str());
  });

  // Quadratic-form identity for the kinetic energy.
  list.guarded(prefix + "kinetic-energy quadratic identity", [&](const std::string& name) {
    double worst = 0.0;
    for (const auto& sample : workspace_samples(cs, 100, 77001)) {
      const double direct =
          direct_kinetic_energy(sys, sample.t, sample.q, sample.qdot);
      const double viaDecomposition =
          kinetic_energy(sys, sample.t, sample.q, sample.qdot);
      worst = std::max(worst, std::abs(direct - viaDecomposition) /
                                  (1.0 + std::abs(direct)));
    }
    list.add(name, worst <= 1e-12,
             "max relative mismatch " + fmt_full(worst));
  });

  // Mass terms and constraint rows must ignore the trailing coordinates.
  if (s > 0) list.guarded(prefix + "ignorable-coordinate independence", [&](const std::string& name) {
    double worst = 0.0;
    const MassDecomposition base =
        derive_mass_decomposition(sys, cs.initial.t0, cs.initial.q);
    const MatX aBase = sys.constraintJac(cs.initial.t0, cs.initial.q);
    for (int j = m - s; j < m; ++j) {
      VecX q = cs.initial.q;
      q[j] += 0.7;
      const MassDecomposition md =
          derive_mass_decomposition(sys, cs.initial.t0, q);
      worst = std::max(worst, (md.M - base.M).cwiseAbs().maxCoeff());
      worst = std::max(worst, (md.N - base.N).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(md.T0 - base.T0));
      if (sys.layout().r > 0) {
        const MatX a = sys.constraintJac(cs.initial.t0, q);
        worst = std::max(worst, (a - aBase).cwiseAbs().maxCoeff());
      }
    }
    list.add(name, worst <= 1e-10,
             "max change " + fmt_full(worst));
  });

  // Velocity-map identities and constrained reconstruction.
  list.guarded(prefix + "velocity-map identities", [&](const std::string&) {
    const DynamicalConstraint dc = case_constraint(cs);
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worstBlock = 0.0;
    double worstResidual = 0.0;
    for (const auto& sample : workspace_samples(cs, 20, 31415)) {
      const ReducedMap map =
          build_reduced_map(sys, cs.qvReduced, dc, sample.t, sample.q);

      MatX A(m, m);
      A.topRows(cs.qvReduced.rows) = cs.qvReduced.jac(sample.t, sample.q);
      const MassDecomposition md =
          derive_mass_decomposition(sys, sample.t, sample.q);
      if (s > 0) A.middleRows(cs.qvReduced.rows, s) = md.M.bottomRows(s);
      if (sys.layout().r > 0) {
        A.bottomRows(sys.layout().r) = sys.constraintJac(sample.t, sample.q);
      }

      MatX expected = MatX::Zero(m, cs.qvReduced.rows);
      expected.topRows(cs.qvReduced.rows).setIdentity();
      worstBlock =
          std::max(worstBlock, (A * map.W - expected).cwiseAbs().maxCoeff());

      VecX u(cs.qvReduced.rows);
      for (int i = 0; i < u.size(); ++i) u[i] = unit(rng);
      const VecX qdot = reconstruct_qdot(map, u);
      const VecX kin = kinematic_constraint_eval(sys, sample.t, sample.q, qdot);
      const VecX dyn = dynamical_constraint_eval(dc, sample.t, sample.q, qdot);
      const double scale =
          1.0 + (dc.count() ? dc.momentum().cwiseAbs().maxCoeff() : 0.0);
      if (kin.size()) {
        worstResidual =
            std::max(worstResidual, kin.cwiseAbs().maxCoeff() / scale);
      }
      if (dyn.size()) {
        worstResidual =
            std::max(worstResidual, dyn.cwiseAbs().maxCoeff() / scale);
      }
    }
    list.add(prefix + "velocity-map block identity", worstBlock <= 1e-10,
             "max block deviation " + fmt_full(worstBlock));
    list.add(prefix + "reconstruction satisfies constraints",
             worstResidual <= 1e-12,
             "max scaled residual " + fmt_full(worstResidual));
  });

  // Initial-state consistency (kinematic residual at t0).
  {
    const VecX res = kinematic_constraint_eval(sys, cs.initial.t0,
                                               cs.initial.q, cs.initial.qdot);
    const double worst = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
    bool ok = worst <= 1e-9 * (1.0 + cs.initial.qdot.cwiseAbs().maxCoeff());
    try {
      make_state_space(cs, Method::volterra_reduced)
          .initialState(cs.initial.t0, cs.initial.q, cs.initial.qdot);
    } catch (const Error&) {
      ok = false;
    }
    list.add(prefix + "initial kinematic-constraint residual", ok,
             "residual " + fmt_full(worst));
  }

  // Mechanical-energy rate along the reduced flow (work-adjusted).
  list.guarded(prefix + "energy rate along the flow", [&](const std::string& name) {
    const StateSpace ss = make_state_space(cs, Method::volterra_reduced);
    IntegratorSettings settings = cs.settings;
    settings.tFinal = 2.0;
    settings.sampleStep = 0.5;
    Trajectory traj = integrate_adaptive(
        [&ss](double t, const VecX& z) { return ss.rhs(t, z); },
        ss.initialState(cs.initial.t0, cs.initial.q, cs.initial.qdot),
        settings);
    annotate_trajectory(traj, ss);

    const auto energyAt = [&](double t, const VecX& z) {
      const VecX q = z.head(m);
      return kinetic_energy(sys, t, q, ss.velocities(t, z)) +
             sys.potential(t, q) - ss.work(z);
    };
    double worst = 0.0;
    double e0 = energyAt(traj.times.front(), traj.states.front());
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const double t = traj.times[i];
      const VecX& z = traj.states[i];
      const VecX zdot = ss.rhs(t, z);
      // Differentiate along the flow tangent with a velocity-scaled step and
      // one extrapolation level; dE/dt is a near-cancellation of large terms
      // on fast systems, so the step must track the state rate.
      const double delta =
          1e-3 / std::max(1.0, zdot.cwiseAbs().maxCoeff());
      const auto rateAt = [&](double d) {
        return (energyAt(t + d, VecX(z + d * zdot)) -
                energyAt(t - d, VecX(z - d * zdot))) /
               (2.0 * d);
      };
      const double rate =
          (4.0 * rateAt(delta / 2.0) - rateAt(delta)) / 3.0;
      worst = std::max(worst, std::abs(rate));
    }
    const double tol = 1e-8 * (1.0 + 0.01 * std::abs(e0));
    list.add(name, worst <= tol, "max |dE/dt| " + fmt_full(worst));
  });

  // Short-horizon cross-method agreement.
  {
    IntegratorSettings settings = cs.settings;
    settings.tFinal = equivalenceHorizon;
    settings.rtol = 1e-10;
    settings.atol = 1e-12;

    bool ok = true;
    std::string detail;
    try {
      const RunResult reference = run_method(cs, Method::lagrange, settings);
      double worst = 0.0;
      for (Method method :
           {Method::maggi, Method::kane, Method::volterra_reduced}) {
        const RunResult run = run_method(cs, method, settings);
        for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
          const VecX dq = run.trajectory.states[i].head(m) -
                          reference.trajectory.states[i].head(m);
          worst = std::max(worst, dq.cwiseAbs().maxCoeff());
        }
      }
      ok = worst <= 1e-6;
      detail = "max coordinate deviation " + fmt_full(worst);
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
    list.add(prefix + "short-horizon method agreement", ok, detail);
  }
}

void verify_fd_order(CheckList& list) {
  // Plain central difference must lose error at least quadratically when the
  // step is halved; the policy adds one Richardson level on top.
  const VectorFn f = [](double t, const VecX& q) {
    VecX out(1);
    out[0] = std::sin(q[0]) * std::cos(q[1] + t);
    return out;
  };
  VecX q(2);
  q << 0.7, -0.3;
  const double t = 0.4;
  const double exact = std::cos(q[0]) * std::cos(q[1] + t);

  const double h = 1e-2;
  const double errH =
      std::abs(central_difference(f, t, q, 0, h)[0] - exact);
  const double errH2 =
      std::abs(central_difference(f, t, q, 0, h / 2.0)[0] - exact);
  const double order = std::log2(errH / errH2);
  // The raw kernel sits asymptotically at order two and may land a hair
  // under it; the binding requirement is on the extrapolated policy below.
  list.add("numdiff: central-difference kernel order", order >= 1.9,
           "observed order " + fmt_full(order));

  const auto richardson = [&](double step) {
    const double coarse = central_difference(f, t, q, 0, step)[0];
    const double fine = central_difference(f, t, q, 0, step / 2.0)[0];
    return (4.0 * fine - coarse) / 3.0;
  };
  const double rErrH = std::abs(richardson(h) - exact);
  const double rErrH2 = std::abs(richardson(h / 2.0) - exact);
  const double rOrder = std::log2(rErrH / rErrH2);
  list.add("numdiff: extrapolated-policy error ratio per halving >= 4",
           rErrH / rErrH2 >= 4.0,
           "observed order " + fmt_full(rOrder));
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  CheckList list;

  if (options.fdOrderOnly) {
    verify_fd_order(list);
    return list.results;
  }

  const std::vector<std::string> ids =
      options.caseIds.empty()
          ? std::vector<std::string>{"cart", "tribody", "satellite"}
          : options.caseIds;

  static const std::map<std::string, std::vector<int>> expected = {
      {"cart", {2}},
      {"tribody", {5, 6, 7}},
      {"satellite", {4, 5, 6}},
  };

  for (const auto& id : ids) {
    CaseStudy cs = build_case(id);
    if (options.perturbConstraint && cs.system.layout().r > 0) {
      cs = perturb_constraint_row(cs);
    }
    verify_case(list, cs, expected.at(id), options.equivalenceHorizon);
  }

  verify_fd_order(list);
  return list.results;
}

}  // namespace vmbd
