// Benchmark harness for the multibody formulation library: integrates the
// built-in case studies with any of the four equation formulations, compares
// them at matched settings, and runs the invariant verification suites.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmbd/errors.hpp"
#include "vmbd/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitBadArguments = 2;
constexpr int kExitRunFailed = 3;

struct RunOptions {
  std::string caseId;
  std::string methodId;
  std::string configPath;
  double tf = -1.0;
  double sample = -1.0;
  double rtol = -1.0;
  double atol = -1.0;
  double maxStep = -1.0;
  bool fixedStep = false;
  std::string outCsv;
  std::string reportJson;
  std::string outDir = ".";
  bool seedless = false;
};

// Precedence: flags override the optional JSON config, which overrides the
// case defaults.
vmbd::IntegratorSettings resolve_settings(const vmbd::CaseStudy& cs,
                                          const RunOptions& opt,
                                          const CLI::App* cmd) {
  vmbd::IntegratorSettings s = cs.settings;

  if (!opt.configPath.empty()) {
    std::ifstream in(opt.configPath);
    if (!in) {
      throw CLI::ValidationError("--config", "cannot open " + opt.configPath);
    }
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ValidationError("--config", e.what());
    }
    if (doc.contains("tf")) s.tFinal = doc["tf"].get<double>();
    if (doc.contains("sample")) s.sampleStep = doc["sample"].get<double>();
    if (doc.contains("rtol")) s.rtol = doc["rtol"].get<double>();
    if (doc.contains("atol")) s.atol = doc["atol"].get<double>();
    if (doc.contains("maxstep")) s.maxStep = doc["maxstep"].get<double>();
    if (doc.contains("fixed") && doc["fixed"].get<bool>()) {
      s.mode = vmbd::IntegratorSettings::Mode::fixed;
    }
  }

  if (cmd->count("--tf")) s.tFinal = opt.tf;
  if (cmd->count("--sample")) s.sampleStep = opt.sample;
  if (cmd->count("--rtol")) s.rtol = opt.rtol;
  if (cmd->count("--atol")) s.atol = opt.atol;
  if (cmd->count("--maxstep")) s.maxStep = opt.maxStep;
  if (opt.fixedStep) s.mode = vmbd::IntegratorSettings::Mode::fixed;
  return s;
}

vmbd::Method require_method(const std::string& id) {
  const auto method = vmbd::parse_method(id);
  if (!method) {
    throw CLI::ValidationError(
        "--method", "unknown method '" + id +
                        "' (expected lagrange, maggi, kane, volterra-reduced)");
  }
  return *method;
}

int do_run(const RunOptions& opt, const CLI::App* cmd) {
  const vmbd::CaseStudy cs = vmbd::build_case(opt.caseId);
  const vmbd::Method method = require_method(opt.methodId);
  const vmbd::IntegratorSettings settings = resolve_settings(cs, opt, cmd);

  vmbd::RunResult result = vmbd::run_method(cs, method, settings);
  if (opt.seedless) result.report.wallSeconds = 0.0;

  if (!opt.outCsv.empty()) {
    const vmbd::StateSpace ss = vmbd::make_state_space(cs, method);
    vmbd::write_trajectory_csv(opt.outCsv, cs, ss, result.trajectory);
  }
  if (!opt.reportJson.empty()) {
    vmbd::write_report_json(opt.reportJson, result.report);
  }

  std::printf("%s %s: %zu samples, states=%d equations=%d wall=%.3fs\n",
              cs.id.c_str(), result.report.methodId.c_str(),
              result.trajectory.times.size(), result.report.nStates,
              result.report.nEquations, result.report.wallSeconds);
  std::printf("  energy drift maxAbs %.3e  kinematic %.3e  dynamical %.3e  "
              "momentum %.3e\n",
              result.report.energyDrift.maxAbs,
              result.report.kinematicResidual.maxAbs,
              result.report.dynamicalResidual.maxAbs,
              result.report.momentumDrift.maxAbs);
  return kExitOk;
}

int do_compare(const RunOptions& opt, const CLI::App* cmd) {
  const vmbd::CaseStudy cs = vmbd::build_case(opt.caseId);
  const vmbd::IntegratorSettings settings = resolve_settings(cs, opt, cmd);
  const int threads = opt.seedless ? 1 : vmbd::thread_cap_from_env();

  std::vector<vmbd::RunResult> results =
      vmbd::run_all_methods(cs, settings, threads);

  std::vector<vmbd::MethodReport> reports;
  for (std::size_t i = 0; i < results.size(); ++i) {
    vmbd::RunResult& r = results[i];
    if (opt.seedless) r.report.wallSeconds = 0.0;
    const vmbd::StateSpace ss =
        vmbd::make_state_space(cs, vmbd::all_methods()[i]);
    const std::string csv =
        opt.outDir + "/" + cs.id + "-" + r.report.methodId + ".csv";
    vmbd::write_trajectory_csv(csv, cs, ss, r.trajectory);
    reports.push_back(r.report);
  }
  const std::string jsonPath = opt.reportJson.empty()
                                   ? opt.outDir + "/" + cs.id + "-compare.json"
                                   : opt.reportJson;
  vmbd::write_compare_json(jsonPath, cs.id, settings, reports);

  std::printf("%-18s %8s %10s %12s %12s %12s %12s\n", "method", "states",
              "equations", "wall[s]", "energy", "kinematic", "momentum");
  for (const auto& r : reports) {
    std::printf("%-18s %8d %10d %12.3f %12.3e %12.3e %12.3e\n",
                r.methodId.c_str(), r.nStates, r.nEquations, r.wallSeconds,
                r.energyDrift.maxAbs, r.kinematicResidual.maxAbs,
                r.momentumDrift.maxAbs);
  }
  std::printf("wrote %s\n", jsonPath.c_str());
  return kExitOk;
}

int do_verify(const vmbd::VerifyOptions& options) {
  const std::vector<vmbd::CheckResult> results =
      vmbd::run_verification(options);
  int failures = 0;
  for (const auto& check : results) {
    std::printf("[%s] %s (%s)\n", check.passed ? "PASS" : "FAIL",
                check.name.c_str(), check.detail.c_str());
    if (!check.passed) ++failures;
  }
  if (failures > 0) {
    std::printf("%d check(s) failed\n", failures);
    return kExitVerifyFailed;
  }
  std::printf("all %zu checks passed\n", results.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multibody formulation benchmark"};
  app.require_subcommand(1);

  RunOptions runOpt;
  CLI::App* run = app.add_subcommand("run", "integrate one case and method");
  run->add_option("--case", runOpt.caseId, "cart | tribody | satellite")
      ->required();
  run->add_option("--method", runOpt.methodId,
                  "lagrange | maggi | kane | volterra-reduced")
      ->required();
  run->add_option("--config", runOpt.configPath, "JSON settings file");
  run->add_option("--tf", runOpt.tf, "final time [s]");
  run->add_option("--sample", runOpt.sample, "output sample step [s]");
  run->add_option("--rtol", runOpt.rtol, "relative tolerance");
  run->add_option("--atol", runOpt.atol, "absolute tolerance");
  run->add_option("--maxstep", runOpt.maxStep, "maximum internal step [s]");
  run->add_flag("--fixed", runOpt.fixedStep,
                "fixed-step mode (one RK4 step per sample)");
  run->add_option("--out", runOpt.outCsv, "trajectory CSV path");
  run->add_option("--report", runOpt.reportJson, "method report JSON path");
  run->add_flag("--seedless", runOpt.seedless,
                "suppress wall-clock content in outputs");

  RunOptions cmpOpt;
  CLI::App* compare =
      app.add_subcommand("compare", "run all four methods at equal settings");
  compare->add_option("--case", cmpOpt.caseId, "cart | tribody | satellite")
      ->required();
  compare->add_option("--config", cmpOpt.configPath, "JSON settings file");
  compare->add_option("--tf", cmpOpt.tf, "final time [s]");
  compare->add_option("--sample", cmpOpt.sample, "output sample step [s]");
  compare->add_option("--rtol", cmpOpt.rtol, "relative tolerance");
  compare->add_option("--atol", cmpOpt.atol, "absolute tolerance");
  compare->add_option("--maxstep", cmpOpt.maxStep, "maximum internal step [s]");
  compare->add_flag("--fixed", cmpOpt.fixedStep, "fixed-step mode");
  compare->add_option("--out-dir", cmpOpt.outDir, "output directory");
  compare->add_option("--report", cmpOpt.reportJson,
                      "combined JSON path (default <dir>/<case>-compare.json)");
  compare->add_flag("--seedless", cmpOpt.seedless,
                    "single-threaded, wall-clock-free outputs");

  vmbd::VerifyOptions verifyOpt;
  std::vector<std::string> verifyCases;
  CLI::App* verify =
      app.add_subcommand("verify", "run the invariant verification suites");
  verify->add_option("--case", verifyCases,
                     "restrict to one or more case ids");
  verify->add_flag("--perturb-constraint", verifyOpt.perturbConstraint,
                   "negative control: corrupt a constraint row");
  verify->add_flag("--fd-order", verifyOpt.fdOrderOnly,
                   "only report the finite-difference convergence order");
  verify->add_option("--horizon", verifyOpt.equivalenceHorizon,
                     "cross-method agreement horizon [s]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArguments;
  }

  try {
    if (run->parsed()) return do_run(runOpt, run);
    if (compare->parsed()) return do_compare(cmpOpt, compare);
    verifyOpt.caseIds = verifyCases;
    return do_verify(verifyOpt);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArguments;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadArguments;
  } catch (const vmbd::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRunFailed;
  }
}
