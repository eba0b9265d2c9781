#pragma once

#include <vector>

#include "tclqr/augmentation.hpp"
#include "tclqr/coupling.hpp"
#include "tclqr/linalg.hpp"
#include "tclqr/noise.hpp"

namespace tclqr {

// Backward-recursion output.  p/q/r are defined for t = 0..N and give the
// stage value function eta^T P_t eta + q_t . eta + r_t; gain/offset are
// defined for t = 0..N-1 and give the optimal control K_t eta + kappa_t.
struct RiccatiSolution {
  std::vector<Matrix> p;
  std::vector<Vector> q;
  std::vector<double> r;
  std::vector<Matrix> gain;
  std::vector<Vector> offset;
  std::vector<Eigen::Index> dims;
};

// Affine history-feedback policy.
struct Controller {
  struct Stage {
    Matrix gain;    // m x nt
    Vector offset;  // m
  };
  std::vector<Stage> stages;

  Vector control(int t, const Eigen::Ref<const Vector>& eta) const;
  int horizon() const { return static_cast<int>(stages.size()); }
};

struct SynthesisProblem {
  PlantModel plant;
  CouplingSpec coupling;
  double lambda = 0.0;
  Matrix effortCost;  // R, symmetric positive definite
  NoiseMoments moments;

  void validate() const;
};

struct SynthesisResult {
  RiccatiSolution solution;
  Controller controller;
  AugmentedSystem system;
  std::vector<StagePenalty> penalties;  // t = 0..N
};

SynthesisResult synthesize(const SynthesisProblem& problem);

// J_0(x0) under the solved recursion.
double value(const RiccatiSolution& solution,
             const Eigen::Ref<const Vector>& x0);

// Stage state-control value: stage cost at (eta, u) plus expected cost-to-go
// under the solved recursion.
double qFunction(const SynthesisResult& result, const SynthesisProblem& problem,
                 int t, const Eigen::Ref<const Vector>& eta,
                 const Eigen::Ref<const Vector>& u);

// Constant relating the original mean+variability objective to the
// history-form objective the recursion optimizes: original = history + offset.
double objectiveOffset(const SynthesisProblem& problem);

}  // namespace tclqr
