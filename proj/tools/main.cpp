#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tclqr/config.hpp"
#include "tclqr/errors.hpp"
#include "tclqr/format.hpp"
#include "tclqr/metrics.hpp"
#include "tclqr/simulation.hpp"
#include "tclqr/synthesis.hpp"
#include "tclqr/verify.hpp"

namespace fs = std::filesystem;

namespace {

using namespace tclqr;

struct RunOpts {
  std::string configPath;
  std::string outPath;
  std::string controllerPath;
  std::uint64_t trials = 0;
  bool trialsSet = false;
  std::uint64_t seed = 0;
  bool seedSet = false;
  int threads = 0;
  int perturbations = 10;
};

std::optional<std::size_t> trialsOverride(const RunOpts& o) {
  if (!o.trialsSet) return std::nullopt;
  return static_cast<std::size_t>(o.trials);
}

std::optional<std::uint64_t> seedOverride(const RunOpts& o) {
  if (!o.seedSet) return std::nullopt;
  return o.seed;
}

void writeFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// External gains must match the plant/window shapes before any rollout; a
// mismatched artifact is a configuration error, not a numerical one.
Controller resolveController(const ExperimentConfig& cfg,
                             const SynthesisResult& result,
                             const std::string& path) {
  if (path.empty()) return result.controller;
  Controller ctrl = loadControllerArtifact(path);
  if (ctrl.horizon() != cfg.plant.horizon) {
    throw ConfigError("controller",
                      "artifact horizon " + std::to_string(ctrl.horizon()) +
                          " does not match plant horizon " +
                          std::to_string(cfg.plant.horizon));
  }
  const Eigen::Index m = cfg.plant.inputDim();
  for (int t = 0; t < ctrl.horizon(); ++t) {
    const auto& st = ctrl.stages[static_cast<std::size_t>(t)];
    if (st.gain.rows() != m || st.gain.cols() != result.system.dim(t) ||
        st.offset.size() != m) {
      throw ConfigError("controller", "stage " + std::to_string(t) +
                                          " gain/offset shape mismatch");
    }
  }
  return ctrl;
}

// Keeps free-text error messages CSV-safe.
std::string sanitized(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

std::string betaField(const ExperimentConfig& cfg) {
  return cfg.coupling.mode == CouplingMode::Difference
             ? formatDouble(cfg.coupling.beta)
             : "";
}

std::string summaryCsv(const ExperimentConfig& cfg, int memory,
                       std::size_t nTrials, std::uint64_t masterSeed,
                       const EnsembleSummary& sum, double valueJ0,
                       const EmpiricalObjectives& obj) {
  std::ostringstream out;
  out << "beta,k,lambda,n_trials,master_seed,d_tot_mean,u_tot_mean,"
         "p_max_mean,value_J0,mc_objective_mean,mc_objective_se\n";
  out << betaField(cfg) << ',' << memory << ',' << formatDouble(cfg.lambda)
      << ',' << nTrials << ',' << masterSeed << ','
      << formatDouble(sum.dTotMean) << ',' << formatDouble(sum.uTotMean) << ','
      << formatDouble(sum.pMaxMean) << ',' << formatDouble(valueJ0) << ','
      << formatDouble(obj.history.mean) << ','
      << formatDouble(obj.history.se) << '\n';
  return out.str();
}

std::string intervalsCsv(const ExperimentConfig& cfg,
                         const EnsembleSummary& sum) {
  std::ostringstream out;
  out << "t,state_index,median,interval_length,mean_value\n";
  for (Eigen::Index t = 0; t < sum.medians.rows(); ++t) {
    for (std::size_t c = 0; c < sum.intervalIndices.size(); ++c) {
      const Eigen::Index ci = static_cast<Eigen::Index>(c);
      out << t << ',' << sum.intervalIndices[c] << ','
          << formatDouble(sum.medians(t, ci)) << ','
          << formatDouble(sum.intervalLengths(t, ci)) << ','
          << formatDouble(sum.meanValues(t, ci)) << '\n';
    }
  }
  return out.str();
}

std::string trialsCsv(const TrajectoryEnsemble& te, const PositionExtractor& pos,
                      double lambda) {
  std::ostringstream out;
  out << "trial,d_tot,u_tot,p_max,obj_original,obj_history\n";
  for (std::size_t i = 0; i < te.trials.size(); ++i) {
    const Trajectory& tr = te.trials[i];
    const ObjectivePair pair = trialObjectives(tr, lambda);
    out << i << ',' << formatDouble(totalDistance(tr, pos)) << ','
        << formatDouble(totalEffort(tr)) << ','
        << formatDouble(maxDistance(tr, pos)) << ','
        << formatDouble(pair.original) << ',' << formatDouble(pair.history)
        << '\n';
  }
  return out.str();
}

nlohmann::json summaryJson(const ExperimentConfig& cfg, int memory,
                           std::size_t nTrials, std::uint64_t masterSeed,
                           const EnsembleSummary& sum, double valueJ0,
                           const EmpiricalObjectives& obj) {
  nlohmann::json j;
  if (cfg.coupling.mode == CouplingMode::Difference) {
    j["beta"] = cfg.coupling.beta;
  } else {
    j["beta"] = nullptr;
  }
  j["k"] = memory;
  j["lambda"] = cfg.lambda;
  j["n_trials"] = nTrials;
  j["master_seed"] = masterSeed;
  j["d_tot_mean"] = sum.dTotMean;
  j["u_tot_mean"] = sum.uTotMean;
  j["p_max_mean"] = sum.pMaxMean;
  j["value_J0"] = valueJ0;
  j["mc_objective_mean"] = obj.history.mean;
  j["mc_objective_se"] = obj.history.se;
  return j;
}

int runSynthesize(const RunOpts& o) {
  const ExperimentConfig cfg = loadExperimentConfig(o.configPath);
  const NoiseMoments moments = computeMoments(cfg);
  const SynthesisProblem problem = toProblem(cfg, moments);
  const SynthesisResult result = synthesize(problem);
  const double j0 = value(result.solution, cfg.plant.x0);
  const double offset = objectiveOffset(problem);
  const std::string artifact = controllerArtifactToJson(result, j0, offset);
  if (o.outPath.empty()) {
    std::cout << artifact;
  } else {
    const fs::path out(o.outPath);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    writeFile(out, artifact);
    std::cout << "wrote " << out.string() << "\n";
  }
  return 0;
}

int runSimulate(const RunOpts& o) {
  const ExperimentConfig cfg = loadExperimentConfig(o.configPath);
  const NoiseMoments moments = computeMoments(cfg);
  const SynthesisProblem problem = toProblem(cfg, moments);
  const SynthesisResult result = synthesize(problem);
  Controller ctrl = resolveController(cfg, result, o.controllerPath);
  const EnsembleConfig ens =
      toEnsemble(cfg, moments, std::move(ctrl), trialsOverride(o),
                 seedOverride(o), o.threads);
  const TrajectoryEnsemble te = runEnsemble(ens);

  PositionExtractor pos{cfg.metrics.positionIndices};
  const EnsembleSummary sum =
      summarize(te, pos, cfg.metrics.intervalIndices, cfg.metrics.coverage);
  const EmpiricalObjectives obj = empiricalObjective(te, cfg.lambda);
  const double j0 = value(result.solution, cfg.plant.x0);
  const int memory = problem.coupling.memory();

  const fs::path outDir(o.outPath);
  fs::create_directories(outDir);
  if (cfg.output.format == "json") {
    nlohmann::json j;
    j["summary"] = summaryJson(cfg, memory, ens.nTrials, ens.masterSeed, sum,
                               j0, obj);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index t = 0; t < sum.medians.rows(); ++t) {
      for (std::size_t c = 0; c < sum.intervalIndices.size(); ++c) {
        const Eigen::Index ci = static_cast<Eigen::Index>(c);
        rows.push_back({{"t", t},
                        {"state_index", sum.intervalIndices[c]},
                        {"median", sum.medians(t, ci)},
                        {"interval_length", sum.intervalLengths(t, ci)},
                        {"mean_value", sum.meanValues(t, ci)}});
      }
    }
    j["intervals"] = std::move(rows);
    if (cfg.output.perTrial) {
      nlohmann::json trials = nlohmann::json::array();
      for (std::size_t i = 0; i < te.trials.size(); ++i) {
        const Trajectory& tr = te.trials[i];
        const ObjectivePair pair = trialObjectives(tr, cfg.lambda);
        trials.push_back({{"trial", i},
                          {"d_tot", totalDistance(tr, pos)},
                          {"u_tot", totalEffort(tr)},
                          {"p_max", maxDistance(tr, pos)},
                          {"obj_original", pair.original},
                          {"obj_history", pair.history}});
      }
      j["trials"] = std::move(trials);
    }
    writeFile(outDir / "summary.json", j.dump(2) + "\n");
    std::cout << "wrote " << (outDir / "summary.json").string() << "\n";
  } else {
    writeFile(outDir / "summary.csv",
              summaryCsv(cfg, memory, ens.nTrials, ens.masterSeed, sum, j0,
                         obj));
    writeFile(outDir / "intervals.csv", intervalsCsv(cfg, sum));
    std::cout << "wrote " << (outDir / "summary.csv").string() << "\n";
    std::cout << "wrote " << (outDir / "intervals.csv").string() << "\n";
    if (cfg.output.perTrial) {
      writeFile(outDir / "trials.csv", trialsCsv(te, pos, cfg.lambda));
      std::cout << "wrote " << (outDir / "trials.csv").string() << "\n";
    }
  }
  return 0;
}

int runSweep(const RunOpts& o) {
  const SweepConfig sweep = loadSweepConfig(o.configPath);
  const fs::path outDir(o.outPath);
  fs::create_directories(outDir);

  std::ostringstream csv;
  csv << "beta,k,lambda,d_tot_mean,u_tot_mean,p_max_mean,value_J0,status\n";
  for (const SweepPoint& pt : sweep.points) {
    const ExperimentConfig cfg = applySweepPoint(sweep.base, pt);
    csv << formatDouble(pt.beta) << ',' << pt.k << ','
        << formatDouble(pt.lambda) << ',';
    try {
      const NoiseMoments moments = computeMoments(cfg);
      const SynthesisProblem problem = toProblem(cfg, moments);
      const SynthesisResult result = synthesize(problem);
      const EnsembleConfig ens =
          toEnsemble(cfg, moments, result.controller, trialsOverride(o),
                     seedOverride(o), o.threads);
      PositionExtractor pos{cfg.metrics.positionIndices};
      pos.validate(cfg.plant.stateDim());
      // Stream the trials; only means are needed, reduced in index order.
      double dSum = 0.0, uSum = 0.0, pSum = 0.0;
      std::vector<double> dTot(ens.nTrials), uTot(ens.nTrials),
          pMax(ens.nTrials);
      forEachTrial(ens, [&](std::size_t i, const Trajectory& tr) {
        dTot[i] = totalDistance(tr, pos);
        uTot[i] = totalEffort(tr);
        pMax[i] = maxDistance(tr, pos);
      });
      for (std::size_t i = 0; i < ens.nTrials; ++i) {
        dSum += dTot[i];
        uSum += uTot[i];
        pSum += pMax[i];
      }
      const double nt = static_cast<double>(ens.nTrials);
      const double j0 = value(result.solution, cfg.plant.x0);
      csv << formatDouble(dSum / nt) << ',' << formatDouble(uSum / nt) << ','
          << formatDouble(pSum / nt) << ',' << formatDouble(j0) << ",ok\n";
    } catch (const SingularityError& e) {
      csv << ",,,,singular: " << sanitized(e.what()) << "\n";
    } catch (const NumericalError& e) {
      csv << ",,,,numerical: " << sanitized(e.what()) << "\n";
    } catch (const InvalidInputError& e) {
      csv << ",,,,invalid: " << sanitized(e.what()) << "\n";
    }
  }
  writeFile(outDir / "sweep.csv", csv.str());
  std::cout << "wrote " << (outDir / "sweep.csv").string() << "\n";
  return 0;
}

int runVerify(const RunOpts& o) {
  const ExperimentConfig cfg = loadExperimentConfig(o.configPath);
  VerifyOptions opts;
  opts.trials = trialsOverride(o);
  opts.seed = seedOverride(o);
  opts.threads = o.threads;
  opts.perturbations = o.perturbations;
  if (!o.controllerPath.empty()) {
    opts.controller = loadControllerArtifact(o.controllerPath);
  }
  const VerifyReport report = runVerification(cfg, opts);

  std::size_t failed = 0, skipped = 0;
  for (const CheckResult& c : report.checks) {
    const char* tag = c.skipped ? "[SKIP]" : (c.passed ? "[PASS]" : "[FAIL]");
    if (c.skipped) {
      ++skipped;
      std::cout << tag << ' ' << c.name << "  " << c.detail << "\n";
      continue;
    }
    if (!c.passed) ++failed;
    std::cout << tag << ' ' << c.name << "  measured=" << c.measured
              << " tol=" << c.tolerance << "  " << c.detail << "\n";
  }
  std::cout << "value_J0 = " << formatDouble(report.valueJ0) << "\n";
  std::cout << "objective_offset = " << formatDouble(report.objectiveOffset)
            << "\n";
  if (failed > 0) {
    std::cout << "verification FAILED (" << failed << " of "
              << report.checks.size() << " checks)\n";
    return 1;
  }
  std::cout << "verification passed (" << report.checks.size() << " checks, "
            << skipped << " skipped)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Finite-horizon LQR with a tunable penalty on the variability of the "
      "sequential state energy"};
  app.require_subcommand(1);

  RunOpts synthOpts, simOpts, sweepOpts, verifyOpts;

  auto addCommon = [](CLI::App* sub, RunOpts& o, bool needOut) {
    sub->add_option("--config", o.configPath, "experiment config (JSON)")
        ->required();
    auto* out = sub->add_option("--out", o.outPath, "output location");
    if (needOut) out->required();
    sub->add_option("--trials", o.trials, "override ensemble trial count");
    sub->add_option("--seed", o.seed, "override ensemble master seed");
    sub->add_option("--threads", o.threads,
                    "worker threads (0 = hardware concurrency)");
  };

  CLI::App* synth =
      app.add_subcommand("synthesize", "solve the recursion, write gains");
  addCommon(synth, synthOpts, false);

  CLI::App* sim =
      app.add_subcommand("simulate", "roll out an ensemble, write metrics");
  addCommon(sim, simOpts, true);
  sim->add_option("--controller", simOpts.controllerPath,
                  "use gains from this artifact instead of synthesizing");

  CLI::App* sweep =
      app.add_subcommand("sweep", "run a grid of design points, write a table");
  addCommon(sweep, sweepOpts, true);

  CLI::App* verify =
      app.add_subcommand("verify", "run the internal consistency checks");
  addCommon(verify, verifyOpts, false);
  verify->add_option("--controller", verifyOpts.controllerPath,
                     "audit gains from this artifact");
  verify->add_option("--perturbations", verifyOpts.perturbations,
                     "gain perturbation count for the optimality check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  simOpts.trialsSet = sim->count("--trials") > 0;
  simOpts.seedSet = sim->count("--seed") > 0;
  sweepOpts.trialsSet = sweep->count("--trials") > 0;
  sweepOpts.seedSet = sweep->count("--seed") > 0;
  verifyOpts.trialsSet = verify->count("--trials") > 0;
  verifyOpts.seedSet = verify->count("--seed") > 0;

  try {
    if (synth->parsed()) return runSynthesize(synthOpts);
    if (sim->parsed()) return runSimulate(simOpts);
    if (sweep->parsed()) return runSweep(sweepOpts);
    if (verify->parsed()) return runVerify(verifyOpts);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SingularityError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidInputError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
