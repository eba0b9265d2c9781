#pragma once

// Shared fixtures for the unit and acceptance suites: the bundled point-mass
// benchmark built directly in code, plus small matrix/statistics helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tclqr/augmentation.hpp"
#include "tclqr/coupling.hpp"
#include "tclqr/linalg.hpp"
#include "tclqr/noise.hpp"
#include "tclqr/rng.hpp"
#include "tclqr/simulation.hpp"
#include "tclqr/synthesis.hpp"

namespace testrig {

using tclqr::Matrix;
using tclqr::Vector;

inline double maxAbsDiff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

inline double relDiff(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Double-integrator point mass in two axes, 0.2 s sampling, 100 stages.
inline tclqr::PlantModel pointMassPlant() {
  tclqr::PlantModel plant;
  plant.a = Matrix{{1.0, 0.2, 0.0, 0.0},
                   {0.0, 1.0, 0.0, 0.0},
                   {0.0, 0.0, 1.0, 0.2},
                   {0.0, 0.0, 0.0, 1.0}};
  plant.b = Matrix{{0.0, 0.0}, {0.2, 0.0}, {0.0, 0.0}, {0.0, 0.2}};
  plant.horizon = 100;
  plant.x0 = Vector{{5.0, 0.0, 5.0, 0.0}};
  return plant;
}

inline Matrix pointMassStateCost() {
  return Vector{{2.0, 0.1, 1.0, 0.1}}.asDiagonal();
}

inline Matrix pointMassEffortCost() { return Matrix::Identity(2, 2); }

// Acceleration disturbance pushed through the input map: one axis gets a
// skewed two-component mixture (an 80% calm mode and a 20% strong-gust mode),
// the other a plain Gaussian.  Second scalar parameters are variances.
inline tclqr::NoiseModel pointMassNoise() {
  std::vector<tclqr::GaussianSpec> comps(2);
  comps[0].mean = Vector::Zero(2);
  comps[0].cov = Vector{{10.0, 10.0}}.asDiagonal();
  comps[1].mean = Vector{{70.0, 0.0}};
  comps[1].cov = Vector{{70.0, 10.0}}.asDiagonal();
  tclqr::NoiseModel inner =
      tclqr::NoiseModel::mixture({0.8, 0.2}, std::move(comps));
  return tclqr::NoiseModel::pushforward(pointMassPlant().b, std::move(inner));
}

// Zero-mean symmetric Gaussian variant of the same disturbance channel.
inline tclqr::NoiseModel pointMassSymmetricNoise() {
  tclqr::NoiseModel inner = tclqr::NoiseModel::gaussian(
      Vector::Zero(2), Vector{{10.0, 10.0}}.asDiagonal());
  return tclqr::NoiseModel::pushforward(pointMassPlant().b, std::move(inner));
}

struct Rig {
  tclqr::SynthesisProblem problem;
  tclqr::NoiseModel noise;
};

// Full benchmark problem for one (beta, k, lambda) triple with closed-form
// noise moments.
inline Rig pointMassRig(double beta, int k, double lambda,
                        bool symmetricNoise = false) {
  Rig rig;
  rig.problem.plant = pointMassPlant();
  rig.problem.coupling =
      tclqr::CouplingSpec::differencePenalty(pointMassStateCost(), beta, k);
  rig.problem.lambda = lambda;
  rig.problem.effortCost = pointMassEffortCost();
  rig.noise = symmetricNoise ? pointMassSymmetricNoise() : pointMassNoise();
  rig.problem.moments =
      tclqr::analyticMoments(rig.noise, rig.problem.coupling.block(0, 0));
  return rig;
}

inline tclqr::EnsembleConfig makeEnsemble(const Rig& rig,
                                          tclqr::Controller controller,
                                          std::size_t trials,
                                          std::uint64_t seed, int threads = 1) {
  tclqr::EnsembleConfig cfg;
  cfg.plant = rig.problem.plant;
  cfg.coupling = rig.problem.coupling;
  cfg.effortCost = rig.problem.effortCost;
  cfg.lambda = rig.problem.lambda;
  cfg.noise = rig.noise;
  cfg.moments = rig.problem.moments;
  cfg.controller = std::move(controller);
  cfg.nTrials = trials;
  cfg.masterSeed = seed;
  cfg.threads = threads;
  return cfg;
}

// Mean and standard error of a sample.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe meanSe(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  if (xs.size() > 1) out.se = std::sqrt(ss / (n - 1) / n);
  return out;
}

// Deterministic dense matrix with entries in [-1, 1).
inline Matrix randomMatrix(tclqr::RandomStream& rs, Eigen::Index rows,
                           Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = 2.0 * rs.uniform01() - 1.0;
    }
  }
  return m;
}

inline Vector randomVector(tclqr::RandomStream& rs, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * rs.uniform01() - 1.0;
  return v;
}

// Random symmetric PSD matrix with eigenvalues spread over [lo, hi].
inline Matrix randomSpd(tclqr::RandomStream& rs, Eigen::Index n, double lo,
                        double hi) {
  const Matrix g = randomMatrix(rs, n, n);
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Vector evals(n);
  const double logLo = std::log(lo), logHi = std::log(hi);
  for (Eigen::Index i = 0; i < n; ++i) {
    evals[i] = std::exp(logLo + (logHi - logLo) * rs.uniform01());
  }
  return tclqr::symmetrize(q * evals.asDiagonal() * q.transpose());
}

}  // namespace testrig
