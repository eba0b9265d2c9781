#include "tclqr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tclqr/errors.hpp"
#include "tclqr/parallel.hpp"
#include "tclqr/rng.hpp"

namespace tclqr {

namespace {

void validateEnsembleConfig(const EnsembleConfig& cfg) {
  cfg.plant.validate();
  const Eigen::Index n = cfg.plant.stateDim();
  if (cfg.coupling.stateDim() != n) {
    throw InvalidInputError("simulation: coupling state dimension mismatch");
  }
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw InvalidInputError("simulation: lambda must be >= 0");
  }
  if (cfg.noise.dim() != n) {
    throw InvalidInputError("simulation: noise dimension mismatch");
  }
  if (cfg.moments.mean.size() != n || cfg.moments.centralCov.rows() != n ||
      cfg.moments.gamma.size() != n) {
    throw InvalidInputError("simulation: noise moment dimension mismatch");
  }
  if (cfg.moments.q00Used.rows() != n ||
      !(cfg.moments.q00Used.array() == cfg.coupling.block(0, 0).array()).all()) {
    throw InvalidInputError(
        "simulation: noise moments were computed against a different "
        "newest-state block");
  }
  const Eigen::Index m = cfg.plant.inputDim();
  if (cfg.effortCost.rows() != m || cfg.effortCost.cols() != m) {
    throw InvalidInputError("simulation: effort cost must be m x m");
  }
  if (cfg.controller.horizon() != cfg.plant.horizon) {
    throw InvalidInputError("simulation: controller horizon mismatch");
  }
  const int k = cfg.coupling.memory();
  for (int t = 0; t < cfg.plant.horizon; ++t) {
    const auto& st = cfg.controller.stages[static_cast<std::size_t>(t)];
    const Eigen::Index nt = n * (std::min(k, t) + 1);
    if (st.gain.rows() != m || st.gain.cols() != nt || st.offset.size() != m) {
      throw InvalidInputError("simulation: controller gain at stage " +
                              std::to_string(t) + " has wrong shape");
    }
  }
}

Trajectory rollout(const EnsembleConfig& cfg, std::size_t trialIndex) {
  const Eigen::Index n = cfg.plant.stateDim();
  const int n_stages = cfg.plant.horizon;
  const int k = cfg.coupling.memory();

  Trajectory traj;
  traj.memory = k;
  traj.trialSeed = deriveStreamSeed(cfg.masterSeed, trialIndex);
  traj.states.reserve(n_stages + 1);
  traj.controls.reserve(n_stages);
  traj.noises.reserve(n_stages);
  traj.z.assign(n_stages + 1, 0.0);
  traj.delta.assign(n_stages + 1, 0.0);
  traj.riskQuad.assign(n_stages + 1, 0.0);
  traj.effort.assign(n_stages, 0.0);

  RandomStream rs(traj.trialSeed);
  const Matrix& sigma = cfg.moments.centralCov;
  const Vector& gamma = cfg.moments.gamma;

  auto riskAt = [&](const Vector& eta, int kt) {
    Vector v = Vector::Zero(n);
    for (int i = 0; i <= kt; ++i) {
      if (cfg.coupling.blockIsZero(0, i)) continue;
      v.noalias() += cfg.coupling.block(0, i) * eta.segment(i * n, n);
    }
    return 4.0 * (v.dot(sigma * v) + gamma.dot(v));
  };

  Vector x = cfg.plant.x0;
  Vector eta = x;
  traj.states.push_back(x);
  for (int t = 0; t < n_stages; ++t) {
    const int kt = std::min(k, t);
    traj.z[t] = sequentialEnergy(cfg.coupling, eta, t);
    traj.riskQuad[t] = riskAt(eta, kt);

    const Vector u = cfg.controller.control(t, eta);
    traj.effort[t] = u.dot(cfg.effortCost * u);
    const Vector w = cfg.noise.sample(rs);
    const Vector xNext = cfg.plant.a * x + cfg.plant.b * u + w;

    const int ktNext = std::min(k, t + 1);
    Vector etaNext(n * (ktNext + 1));
    etaNext.head(n) = xNext;
    etaNext.tail(etaNext.size() - n) = eta.head(etaNext.size() - n);

    traj.controls.push_back(u);
    traj.noises.push_back(w);
    traj.states.push_back(xNext);
    x = xNext;
    eta = std::move(etaNext);
  }
  traj.z[n_stages] = sequentialEnergy(cfg.coupling, eta, n_stages);
  traj.riskQuad[n_stages] = riskAt(eta, std::min(k, n_stages));

  for (int t = 1; t <= n_stages; ++t) {
    traj.delta[t] = realizeDeltaTerms(traj, cfg.coupling, cfg.moments, t).delta;
  }
  return traj;
}

}  // namespace

Vector Trajectory::eta(int t) const {
  if (t < 0 || t >= static_cast<int>(states.size())) {
    throw InvalidInputError("trajectory: stage out of range");
  }
  const Eigen::Index n = states.front().size();
  const int kt = std::min(memory, t);
  Vector out(n * (kt + 1));
  for (int i = 0; i <= kt; ++i) {
    out.segment(i * n, n) = states[static_cast<std::size_t>(t - i)];
  }
  return out;
}

Trajectory simulate(const EnsembleConfig& config, std::size_t trialIndex) {
  validateEnsembleConfig(config);
  return rollout(config, trialIndex);
}

DeltaTerms realizeDeltaTerms(const Trajectory& traj, const CouplingSpec& spec,
                             const NoiseMoments& moments, int t) {
  if (t < 1 || t > traj.horizon()) {
    throw InvalidInputError(
        "surprise realization needs 1 <= t <= horizon (no prediction exists "
        "for t = 0)");
  }
  const Matrix& q00 = spec.block(0, 0);
  if (!(moments.q00Used.array() == q00.array()).all()) {
    throw InvalidInputError(
        "surprise realization: moments/coupling newest-state block mismatch");
  }
  const Vector d = traj.noises[static_cast<std::size_t>(t) - 1] - moments.mean;
  // The conditional mean of x_t given the past is x_t minus the centered
  // noise, so no plant matrices are needed here.
  const Vector xhat = traj.states[static_cast<std::size_t>(t)] - d;
  const double trSq = (moments.centralCov * q00).trace();
  const double y = d.dot(q00 * d) - trSq + 2.0 * xhat.dot(q00 * d);

  const int kt = std::min(spec.memory(), t);
  double hist = 0.0;  // sum_i x_{t-i}^T Q_{i0} d
  for (int i = 1; i <= kt; ++i) {
    if (spec.blockIsZero(i, 0)) continue;
    hist += traj.states[static_cast<std::size_t>(t - i)].dot(spec.block(i, 0) * d);
  }

  DeltaTerms out;
  out.delta = 2.0 * hist + y;
  out.part1 = y * y;
  out.part2 = 4.0 * hist * hist;
  out.part3 = 4.0 * hist * y;
  return out;
}

double realizeDelta(const Trajectory& traj, const CouplingSpec& spec,
                    const NoiseMoments& moments, int t) {
  return realizeDeltaTerms(traj, spec, moments, t).delta;
}

TrajectoryEnsemble runEnsemble(const EnsembleConfig& config) {
  validateEnsembleConfig(config);
  if (config.nTrials == 0) {
    throw InvalidInputError("ensemble: need at least one trial");
  }
  TrajectoryEnsemble out;
  out.masterSeed = config.masterSeed;
  out.trials.resize(config.nTrials);
  parallelFor(config.nTrials, config.threads, [&](std::size_t i) {
    out.trials[i] = rollout(config, i);
  });
  return out;
}

void forEachTrial(const EnsembleConfig& config,
                  const std::function<void(std::size_t, const Trajectory&)>& visit) {
  validateEnsembleConfig(config);
  if (config.nTrials == 0) {
    throw InvalidInputError("ensemble: need at least one trial");
  }
  parallelFor(config.nTrials, config.threads, [&](std::size_t i) {
    const Trajectory traj = rollout(config, i);
    visit(i, traj);
  });
}

ObjectivePair trialObjectives(const Trajectory& traj, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInputError("trial objectives: lambda must be >= 0");
  }
  double zSum = 0.0, effortSum = 0.0, surprise = 0.0, risk = 0.0;
  for (double v : traj.z) zSum += v;
  for (double v : traj.effort) effortSum += v;
  for (std::size_t t = 1; t < traj.delta.size(); ++t) {
    surprise += traj.delta[t] * traj.delta[t];
  }
  for (double v : traj.riskQuad) risk += v;
  ObjectivePair out;
  out.original = zSum + effortSum + lambda * surprise;
  out.history = zSum + effortSum + lambda * risk;
  return out;
}

EmpiricalObjectives empiricalObjective(const TrajectoryEnsemble& ensemble,
                                       double lambda) {
  if (ensemble.trials.empty()) {
    throw InvalidInputError("empirical objective: empty ensemble");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInputError("empirical objective: lambda must be >= 0");
  }
  const std::size_t n = ensemble.trials.size();
  std::vector<double> original(n), history(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ObjectivePair pair = trialObjectives(ensemble.trials[i], lambda);
    original[i] = pair.original;
    history[i] = pair.history;
    diff[i] = pair.original - pair.history;
  }

  auto estimate = [n](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    ObjectiveEstimate est;
    est.mean = mean;
    est.se = n > 1 ? std::sqrt(ss / (static_cast<double>(n) - 1.0) /
                               static_cast<double>(n))
                   : 0.0;
    return est;
  };

  EmpiricalObjectives out;
  out.original = estimate(original);
  out.history = estimate(history);
  out.difference = estimate(diff);
  return out;
}

}  // namespace tclqr
