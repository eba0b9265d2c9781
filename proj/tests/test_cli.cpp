#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "tclqr/config.hpp"

#ifndef TCLQR_CLI_PATH
#error "TCLQR_CLI_PATH must point at the command-line binary"
#endif
#ifndef TCLQR_CONFIG_DIR
#error "TCLQR_CONFIG_DIR must point at the bundled config directory"
#endif

namespace fs = std::filesystem;

namespace {

int runCli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + TCLQR_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path scratchDir() {
  const fs::path dir = fs::current_path() / "cli_scratch";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string bundled(const std::string& name) {
  return std::string(TCLQR_CONFIG_DIR) + "/" + name;
}

// Point-mass experiment with the noise turned off: every rollout is the same,
// so metrics must have zero spread and reruns must be byte-identical.
std::string writeQuietConfig(const fs::path& dir) {
  const auto path = dir / "quiet.json";
  std::ofstream out(path);
  out << R"({
  "schema": 1,
  "plant": {
    "A": [[1, 0.2, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0.2], [0, 0, 0, 1]],
    "B": [[0, 0], [0.2, 0], [0, 0], [0, 0.2]],
    "N": 100,
    "x0": [5, 0, 5, 0]
  },
  "coupling": {
    "mode": "difference",
    "Q": [[2, 0, 0, 0], [0, 0.1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0.1]],
    "beta": 1.0,
    "k": 1
  },
  "lambda": 1.0,
  "R": [[1, 0], [0, 1]],
  "noise": {
    "model": {
      "type": "gaussian",
      "mean": [0, 0, 0, 0],
      "cov": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
    },
    "param": "variance",
    "moments": "analytic"
  },
  "ensemble": {"n_trials": 3, "master_seed": 5},
  "metrics": {
    "position_indices": [1, 3],
    "interval_indices": [1, 2],
    "coverage": 0.95
  },
  "output": {"format": "csv", "per_trial": true}
})";
  return path.string();
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bad invocations exit with the argument-error code") {
  CHECK(runCli("") == 2);
  CHECK(runCli("simulate") == 2);  // --config is required
  CHECK(runCli("simulate --config /nonexistent/nope.json --out x") == 2);
  CHECK(runCli("simulate --bogus-flag 1") == 2);
  const auto dir = scratchDir();
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\"schema\": 1, \"plant\": \"oops\"";
  }
  CHECK(runCli("simulate --config " + (dir / "bad.json").string() +
               " --out " + (dir / "bad_out").string()) == 2);
}

TEST_CASE("synthesize writes a loadable artifact with the right shapes") {
  const auto dir = scratchDir();

  const auto memoryless = dir / "ctrl_memoryless.json";
  REQUIRE(runCli("synthesize --config " + bundled("pointmass_theta7.json") +
                 " --out " + memoryless.string()) == 0);
  const auto flat = tclqr::loadControllerArtifact(memoryless.string());
  REQUIRE(flat.horizon() == 100);
  for (int t = 0; t < 100; ++t) {
    CHECK(flat.stages[static_cast<std::size_t>(t)].gain.rows() == 2);
    CHECK(flat.stages[static_cast<std::size_t>(t)].gain.cols() == 4);
  }

  const auto windowed = dir / "ctrl_windowed.json";
  REQUIRE(runCli("synthesize --config " + bundled("pointmass_theta2.json") +
                 " --out " + windowed.string()) == 0);
  const auto deep = tclqr::loadControllerArtifact(windowed.string());
  REQUIRE(deep.horizon() == 100);
  CHECK(deep.stages[0].gain.cols() == 4);
  for (int t = 1; t < 100; ++t) {
    CHECK(deep.stages[static_cast<std::size_t>(t)].gain.cols() == 8);
  }

  // The artifact also carries the value constants.
  const auto root = nlohmann::json::parse(slurp(windowed));
  CHECK(root.contains("value_J0"));
  CHECK(root.contains("objective_offset"));
  CHECK(root["memory"] == 1);
}

TEST_CASE("simulate without randomness: zero spread, byte-stable reruns") {
  const auto dir = scratchDir();
  const auto cfg = writeQuietConfig(dir);

  const auto out1 = dir / "quiet_run1";
  const auto out2 = dir / "quiet_run2";
  REQUIRE(runCli("simulate --config " + cfg + " --out " + out1.string()) == 0);
  REQUIRE(runCli("simulate --config " + cfg + " --out " + out2.string()) == 0);

  const std::string intervals = slurp(out1 / "intervals.csv");
  std::stringstream lines(intervals);
  std::string line;
  std::getline(lines, line);  // header
  CHECK(line == "t,state_index,median,interval_length,mean_value");
  int rows = 0;
  while (std::getline(lines, line)) {
    const auto fields = splitCsvLine(line);
    REQUIRE(fields.size() == 5);
    CHECK(fields[3] == "0");  // interval_length
    ++rows;
  }
  CHECK(rows == 101 * 2);

  CHECK(slurp(out1 / "summary.csv") == slurp(out2 / "summary.csv"));
  CHECK(slurp(out1 / "intervals.csv") == slurp(out2 / "intervals.csv"));
  CHECK(slurp(out1 / "trials.csv") == slurp(out2 / "trials.csv"));

  // Identical trials: the per-trial table has three identical rows apart
  // from the index column.
  std::stringstream trials(slurp(out1 / "trials.csv"));
  std::getline(trials, line);
  std::vector<std::string> bodies;
  while (std::getline(trials, line)) {
    bodies.push_back(line.substr(line.find(',')));
  }
  REQUIRE(bodies.size() == 3);
  CHECK(bodies[0] == bodies[1]);
  CHECK(bodies[1] == bodies[2]);
}

TEST_CASE("simulate is thread-count invariant and honors overrides") {
  const auto dir = scratchDir();
  const std::string cfg = bundled("pointmass_theta2.json");
  const auto serial = dir / "mix_serial";
  const auto threaded = dir / "mix_threaded";
  const std::string common = "simulate --config " + cfg +
                             " --trials 64 --seed 13 ";
  REQUIRE(runCli(common + "--threads 1 --out " + serial.string()) == 0);
  REQUIRE(runCli(common + "--threads 4 --out " + threaded.string()) == 0);
  CHECK(slurp(serial / "summary.csv") == slurp(threaded / "summary.csv"));
  CHECK(slurp(serial / "intervals.csv") == slurp(threaded / "intervals.csv"));

  // The overrides show up in the summary row.
  std::stringstream ss(slurp(serial / "summary.csv"));
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  const auto fields = splitCsvLine(row);
  REQUIRE(fields.size() == 11);
  CHECK(fields[3] == "64");  // n_trials
  CHECK(fields[4] == "13");  // master_seed
}

TEST_CASE("an external controller artifact reproduces the built-in run") {
  const auto dir = scratchDir();
  const std::string cfg = bundled("pointmass_theta2.json");
  const auto ctrl = dir / "ctrl_for_replay.json";
  REQUIRE(runCli("synthesize --config " + cfg + " --out " + ctrl.string()) == 0);

  const auto builtin = dir / "replay_builtin";
  const auto external = dir / "replay_external";
  const std::string common =
      "simulate --config " + cfg + " --trials 32 --seed 21 --threads 1 ";
  REQUIRE(runCli(common + "--out " + builtin.string()) == 0);
  REQUIRE(runCli(common + "--controller " + ctrl.string() + " --out " +
                 external.string()) == 0);
  CHECK(slurp(builtin / "summary.csv") == slurp(external / "summary.csv"));
  CHECK(slurp(builtin / "intervals.csv") == slurp(external / "intervals.csv"));

  // A shape-mismatched artifact is a configuration error.
  REQUIRE(runCli("simulate --config " + bundled("pointmass_theta7.json") +
                 " --trials 4 --controller " + ctrl.string() + " --out " +
                 (dir / "replay_bad").string()) == 2);
}

TEST_CASE("sweep rows agree with individual simulate runs") {
  const auto dir = scratchDir();
  // One-point sweep whose base matches the theta2 experiment.
  const auto cfgText = slurp(bundled("pointmass_theta2.json"));
  const auto sweepPath = dir / "one_point_sweep.json";
  {
    std::ofstream out(sweepPath);
    out << "{\"schema\": 1, \"base\": " << cfgText
        << ", \"points\": [{\"beta\": 1.0, \"k\": 1, \"lambda\": 1.0}]}";
  }
  const auto sweepOut = dir / "sweep_out";
  REQUIRE(runCli("sweep --config " + sweepPath.string() +
                 " --trials 48 --seed 33 --threads 1 --out " +
                 sweepOut.string()) == 0);
  const auto simOut = dir / "sweep_ref";
  REQUIRE(runCli("simulate --config " + bundled("pointmass_theta2.json") +
                 " --trials 48 --seed 33 --threads 1 --out " +
                 simOut.string()) == 0);

  std::stringstream sweepCsv(slurp(sweepOut / "sweep.csv"));
  std::string line;
  std::getline(sweepCsv, line);
  CHECK(line ==
        "beta,k,lambda,d_tot_mean,u_tot_mean,p_max_mean,value_J0,status");
  std::getline(sweepCsv, line);
  const auto sweepFields = splitCsvLine(line);
  REQUIRE(sweepFields.size() == 8);
  CHECK(sweepFields[7] == "ok");

  std::stringstream simCsv(slurp(simOut / "summary.csv"));
  std::getline(simCsv, line);
  std::getline(simCsv, line);
  const auto simFields = splitCsvLine(line);
  REQUIRE(simFields.size() == 11);
  // beta, k, lambda and the three metric means match field for field.
  CHECK(sweepFields[0] == simFields[0]);
  CHECK(sweepFields[1] == simFields[1]);
  CHECK(sweepFields[2] == simFields[2]);
  CHECK(sweepFields[3] == simFields[5]);  // d_tot_mean
  CHECK(sweepFields[4] == simFields[6]);  // u_tot_mean
  CHECK(sweepFields[5] == simFields[7]);  // p_max_mean
  CHECK(sweepFields[6] == simFields[8]);  // value_J0
}

TEST_CASE("verify passes on a healthy setup and fails on corrupted gains") {
  const auto dir = scratchDir();
  const std::string cfg = bundled("pointmass_theta7.json");
  CHECK(runCli("verify --config " + cfg +
               " --trials 400 --perturbations 4 --threads 1 --seed 11") == 0);

  const auto ctrl = dir / "ctrl_to_corrupt.json";
  REQUIRE(runCli("synthesize --config " + cfg + " --out " + ctrl.string()) == 0);
  auto root = nlohmann::json::parse(slurp(ctrl));
  // Scale every feedback entry so the audited policy is clearly suboptimal.
  for (auto& stage : root["stages"]) {
    for (auto& row : stage["K"]) {
      for (auto& v : row) v = v.get<double>() * 1.3;
    }
  }
  {
    std::ofstream out(ctrl);
    out << root.dump(2) << "\n";
  }
  CHECK(runCli("verify --config " + cfg + " --controller " + ctrl.string() +
               " --trials 400 --perturbations 4 --threads 1 --seed 11") == 1);
}

}  // TEST_SUITE
