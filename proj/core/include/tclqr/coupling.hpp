#pragma once

#include <vector>

#include "tclqr/linalg.hpp"
#include "tclqr/noise.hpp"

namespace tclqr {

// Symmetric PSD cost over a truncated state history [x_t; ...; x_{t-k}],
// stored as a (k+1) x (k+1) grid of n x n blocks.  Block (0,0) weights the
// newest state and is the one the noise moments must be computed against.
class CouplingSpec {
 public:
  CouplingSpec() = default;  // empty, unusable until assigned from a factory

  // Arbitrary grid.  Throws when the assembled matrix is not symmetric PSD;
  // the error names the smallest eigenvalue.
  static CouplingSpec general(std::vector<std::vector<Matrix>> blocks);

  // Energy q on the newest state plus qbar on the one-step increment:
  // x^T q x + (x - x_prev)^T qbar (x - x_prev).  k = 1.
  static CouplingSpec oneStep(const Matrix& q, const Matrix& qbar);

  // x^T q x + beta * sum_{i=1..k} (x - x_{t-i})^T q (x - x_{t-i}).
  static CouplingSpec differencePenalty(const Matrix& q, double beta, int k);

  Eigen::Index stateDim() const noexcept { return n_; }
  int memory() const noexcept { return k_; }

  const Matrix& block(int i, int j) const;
  bool blockIsZero(int i, int j) const;

  // Full (k+1)n square matrix.
  Matrix assembled() const;
  // Leading n*(kt+1) principal submatrix, the stage cost when only kt past
  // states exist.
  Matrix truncated(int kt) const;

 private:
  CouplingSpec(Eigen::Index n, int k) : n_(n), k_(k) {}
  void finalize();  // symmetry + PSD validation, zero-block flags

  Eigen::Index n_ = 0;
  int k_ = 0;
  std::vector<Matrix> blocks_;  // row-major (k+1)^2
  std::vector<char> zero_;
};

// Stage t cost pieces for the history state eta_t of size nt = n*(kt+1):
//   historyCost   state energy weight (truncated grid)
//   riskHessian   H_t, curvature of the predictive-variance surrogate
//   riskLinear    zeta_t, its linear term
//   inflatedCost  historyCost + lambda * riskHessian
struct StagePenalty {
  int t = 0;
  int kt = 0;
  Eigen::Index nt = 0;
  Matrix historyCost;
  Matrix riskHessian;
  Vector riskLinear;
  Matrix inflatedCost;
};

// Requires moments.q00Used to equal spec.block(0,0) entrywise; the higher
// moments are only meaningful against that block.
StagePenalty stagePenalty(const CouplingSpec& spec, int t, double lambda,
                          const NoiseMoments& moments);

// z_t = eta^T (truncated grid) eta for the history eta at a stage with
// min(k, t) past states.  eta is newest-first.
double sequentialEnergy(const CouplingSpec& spec,
                        const Eigen::Ref<const Vector>& eta, int t);

}  // namespace tclqr
