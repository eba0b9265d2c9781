#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tclqr/augmentation.hpp"
#include "tclqr/coupling.hpp"
#include "tclqr/linalg.hpp"
#include "tclqr/noise.hpp"
#include "tclqr/synthesis.hpp"

namespace tclqr {

// One closed-loop rollout.  Arrays indexed by stage; delta and riskQuad keep
// slot 0 so indices line up with states (delta[0] is defined as 0 and the
// one-step surprise only exists for t >= 1).
struct Trajectory {
  int memory = 0;  // history length k the rollout was scored with
  std::vector<Vector> states;    // x_0 .. x_N
  std::vector<Vector> controls;  // u_0 .. u_{N-1}
  std::vector<Vector> noises;    // w_0 .. w_{N-1}
  std::vector<double> z;         // state energy z_0 .. z_N
  std::vector<double> delta;     // one-step energy surprise, t >= 1
  std::vector<double> riskQuad;  // eta^T H_t eta + zeta_t . eta
  std::vector<double> effort;    // u^T R u per stage
  std::uint64_t trialSeed = 0;

  int horizon() const { return static_cast<int>(controls.size()); }
  // Stacked history [x_t; ...; x_{t-min(k,t)}], newest first.
  Vector eta(int t) const;
};

struct EnsembleConfig {
  PlantModel plant;
  CouplingSpec coupling;
  Matrix effortCost;  // R
  double lambda = 0.0;
  NoiseModel noise;
  NoiseMoments moments;
  Controller controller;
  std::size_t nTrials = 0;
  std::uint64_t masterSeed = 0;
  int threads = 0;  // 0 = hardware concurrency
};

// Rolls out trial `trialIndex`; depends only on (masterSeed, trialIndex) and
// the config, never on scheduling.
Trajectory simulate(const EnsembleConfig& config, std::size_t trialIndex);

// Delta_t and its square's exact three-part split (parts sum to delta^2).
struct DeltaTerms {
  double delta = 0.0;
  double part1 = 0.0;  // y_t^2
  double part2 = 0.0;  // 4 (history inner product)^2
  double part3 = 0.0;  // 4 * cross term
};

// Recomputes the stage-t surprise from a stored rollout.  t must be >= 1.
DeltaTerms realizeDeltaTerms(const Trajectory& traj, const CouplingSpec& spec,
                             const NoiseMoments& moments, int t);
double realizeDelta(const Trajectory& traj, const CouplingSpec& spec,
                    const NoiseMoments& moments, int t);

struct TrajectoryEnsemble {
  std::vector<Trajectory> trials;
  std::uint64_t masterSeed = 0;
};

TrajectoryEnsemble runEnsemble(const EnsembleConfig& config);

// Streaming variant: each trial's trajectory is produced once, handed to the
// visitor and dropped.  The visitor runs concurrently for distinct indices
// and must only write to per-index state.
void forEachTrial(const EnsembleConfig& config,
                  const std::function<void(std::size_t, const Trajectory&)>& visit);

struct ObjectiveEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Realized cost of one rollout in both forms: `original` charges the squared
// surprises, `history` the quadratic-plus-linear stage risk terms.
struct ObjectivePair {
  double original = 0.0;
  double history = 0.0;
};

ObjectivePair trialObjectives(const Trajectory& traj, double lambda);

// Sample means over an ensemble of the two cost forms and their per-trial
// difference: `original` is the mean+variability objective with realized
// squared surprises, `history` is the stage-cost form the recursion
// optimizes.  The paired difference estimates the affine offset between the
// two objectives.
struct EmpiricalObjectives {
  ObjectiveEstimate original;
  ObjectiveEstimate history;
  ObjectiveEstimate difference;
};

EmpiricalObjectives empiricalObjective(const TrajectoryEnsemble& ensemble,
                                       double lambda);

}  // namespace tclqr
