#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tclqr/coupling.hpp"
#include "tclqr/metrics.hpp"
#include "tclqr/noise.hpp"
#include "tclqr/simulation.hpp"
#include "tclqr/synthesis.hpp"

namespace tclqr {

enum class CouplingMode { General, OneStep, Difference };

struct CouplingConfig {
  CouplingMode mode = CouplingMode::Difference;
  Matrix q;     // difference / one_step
  Matrix qbar;  // one_step
  double beta = 0.0;
  int k = 0;
  std::vector<std::vector<Matrix>> blocks;  // general
};

struct MomentMethod {
  bool analytic = true;
  std::size_t samples = 1000000;
  std::uint64_t seed = 0x5EED;
};

struct NoiseConfig {
  std::optional<NoiseModel> model;
  std::string param = "variance";  // how scalar spreads were given
  MomentMethod moments;
};

struct EnsembleSettings {
  std::size_t nTrials = 1000;
  std::uint64_t masterSeed = 0;
};

struct MetricsConfig {
  std::vector<int> positionIndices;
  std::vector<int> intervalIndices;
  double coverage = 0.95;
};

struct OutputConfig {
  std::string format = "csv";  // "csv" or "json"
  bool perTrial = false;
};

struct ExperimentConfig {
  PlantModel plant;
  CouplingConfig coupling;
  double lambda = 0.0;
  Matrix effortCost;
  NoiseConfig noise;
  EnsembleSettings ensemble;
  MetricsConfig metrics;
  OutputConfig output;
};

// Strict parse: unknown fields are rejected and every error names the field
// path.  Throws ConfigError.
ExperimentConfig parseExperimentConfig(const std::string& jsonText);
ExperimentConfig loadExperimentConfig(const std::string& path);
std::string dumpExperimentConfig(const ExperimentConfig& config);

CouplingSpec buildCoupling(const CouplingConfig& config);
NoiseMoments computeMoments(const ExperimentConfig& config);
SynthesisProblem toProblem(const ExperimentConfig& config,
                           const NoiseMoments& moments);
EnsembleConfig toEnsemble(const ExperimentConfig& config,
                          const NoiseMoments& moments, Controller controller,
                          std::optional<std::size_t> trialsOverride = {},
                          std::optional<std::uint64_t> seedOverride = {},
                          int threads = 0);

struct SweepPoint {
  double beta = 0.0;
  int k = 0;
  double lambda = 0.0;
};

// Sweep file: a base experiment (difference coupling) plus either an explicit
// point list or per-axis grids crossed in order.
struct SweepConfig {
  ExperimentConfig base;
  std::vector<SweepPoint> points;
};

SweepConfig parseSweepConfig(const std::string& jsonText);
SweepConfig loadSweepConfig(const std::string& path);

// Applies one sweep point to the base config (difference mode only).
ExperimentConfig applySweepPoint(const ExperimentConfig& base,
                                 const SweepPoint& point);

// Controller/value artifact written by synthesis runs: gains, offsets, the
// recursion matrices and the two value constants.
std::string controllerArtifactToJson(const SynthesisResult& result,
                                     double valueAtX0, double offset);
Controller controllerFromArtifactJson(const std::string& jsonText);
Controller loadControllerArtifact(const std::string& path);

}  // namespace tclqr
