#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tclqr/config.hpp"
#include "tclqr/synthesis.hpp"

namespace tclqr {

// Finite-horizon LQR with additive noise of mean `noiseMean` and covariance
// `noiseCov`, written directly against the plant matrices (no history
// augmentation, no variability terms).  Serves as an independent oracle for
// the zero-risk reduction of the main recursion.
struct ClassicalLqr {
  std::vector<Matrix> p;       // t = 0..N
  std::vector<Vector> q;
  std::vector<double> r;
  std::vector<Matrix> gain;    // t = 0..N-1
  std::vector<Vector> offset;
};

ClassicalLqr classicalLqr(const PlantModel& plant, const Matrix& stateCost,
                          const Matrix& effortCost, const Vector& noiseMean,
                          const Matrix& noiseCov);

struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double measured = 0.0;   // worst normalized discrepancy seen
  double tolerance = 0.0;  // gate it was compared against
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  double valueJ0 = 0.0;
  double objectiveOffset = 0.0;

  bool allPassed() const {
    for (const auto& c : checks) {
      if (!c.skipped && !c.passed) return false;
    }
    return true;
  }
};

struct VerifyOptions {
  std::optional<std::size_t> trials;        // default 5000
  std::optional<std::uint64_t> seed;        // default: config master seed
  int threads = 0;                          // 0 = hardware concurrency
  std::optional<Controller> controller;     // external artifact to audit
  std::size_t decompositionTrials = 0;      // 0 = min(trials, 1000)
  int perturbations = 10;
  std::size_t perturbationTrials = 0;       // 0 = min(trials, 500)
};

// Runs the internal-consistency suite against one experiment: the zero-risk
// reduction, the Bellman/stationarity identities of the recursion, the exact
// decomposition and conditional moments of the energy surprise, the match
// between the recursion value and sampled cost, the affine offset between
// the two objective forms, and paired gain perturbations.  When an external
// controller is supplied the rollout-based checks audit it instead of the
// freshly synthesized one.
VerifyReport runVerification(const ExperimentConfig& config,
                             const VerifyOptions& options = {});

}  // namespace tclqr
