#pragma once

#include <vector>

#include "tclqr/linalg.hpp"

namespace tclqr {

struct PlantModel {
  Matrix a;      // n x n
  Matrix b;      // n x m
  int horizon = 0;
  Vector x0;

  Eigen::Index stateDim() const { return a.rows(); }
  Eigen::Index inputDim() const { return b.cols(); }
  void validate() const;
};

// History-stacked form of the plant.  The stage state is
// eta_t = [x_t; x_{t-1}; ...; x_{t-kt}], kt = min(k, t), so its dimension
// grows until the window fills and is constant afterwards.  Stage matrices
// are materialized up front; step() exploits the shift structure and keeps
// the newest block bitwise identical to iterating the flat plant.
class AugmentedSystem {
 public:
  AugmentedSystem() = default;

  static AugmentedSystem build(const PlantModel& plant, int memory);

  int horizon() const noexcept { return horizon_; }
  int memory() const noexcept { return k_; }
  Eigen::Index stateDim() const noexcept { return n_; }
  Eigen::Index inputDim() const noexcept { return m_; }

  // n * (min(k, t) + 1) for t in [0, horizon].
  Eigen::Index dim(int t) const;
  int memoryAt(int t) const;

  // Stage maps for t in [0, horizon): eta_{t+1} = aTilde eta + bTilde u + cTilde w.
  const Matrix& aTilde(int t) const;
  const Matrix& bTilde(int t) const;
  const Matrix& cTilde(int t) const;

  Vector step(int t, const Eigen::Ref<const Vector>& eta,
              const Eigen::Ref<const Vector>& u,
              const Eigen::Ref<const Vector>& w) const;

 private:
  int horizon_ = 0;
  int k_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Matrix a_, b_;
  std::vector<Matrix> aTilde_, bTilde_, cTilde_;
};

// eta_0 = x_0 (no history yet).
Vector initialEta(const PlantModel& plant);

}  // namespace tclqr
