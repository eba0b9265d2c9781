#include "tclqr/augmentation.hpp"

#include <algorithm>
#include <string>

#include "tclqr/errors.hpp"

namespace tclqr {

void PlantModel::validate() const {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw InvalidInputError("plant: A must be square and non-empty");
  }
  if (b.rows() != a.rows() || b.cols() == 0) {
    throw InvalidInputError("plant: B must be n x m with m >= 1");
  }
  if (horizon < 1) {
    throw InvalidInputError("plant: horizon must be >= 1");
  }
  if (x0.size() != a.rows()) {
    throw InvalidInputError("plant: x0 has wrong dimension");
  }
  requireFinite(a, "plant A");
  requireFinite(b, "plant B");
  requireFinite(x0, "plant x0");
}

AugmentedSystem AugmentedSystem::build(const PlantModel& plant, int memory) {
  plant.validate();
  if (memory < 0) {
    throw InvalidInputError("augmentation: memory must be >= 0");
  }
  AugmentedSystem sys;
  sys.horizon_ = plant.horizon;
  sys.k_ = memory;
  sys.n_ = plant.stateDim();
  sys.m_ = plant.inputDim();
  sys.a_ = plant.a;
  sys.b_ = plant.b;

  const Eigen::Index n = sys.n_;
  const Eigen::Index m = sys.m_;
  sys.aTilde_.reserve(plant.horizon);
  sys.bTilde_.reserve(plant.horizon);
  sys.cTilde_.reserve(plant.horizon);
  for (int t = 0; t < plant.horizon; ++t) {
    const int kt = std::min(memory, t);
    const int ktNext = std::min(memory, t + 1);
    const Eigen::Index nt = n * (kt + 1);
    const Eigen::Index ntNext = n * (ktNext + 1);

    // Top block maps the newest state forward, the carry block below shifts
    // the history window.
    Matrix at = Matrix::Zero(ntNext, nt);
    at.topLeftCorner(n, n) = plant.a;
    const Eigen::Index carry = ntNext - n;  // rows of retained history
    at.block(n, 0, carry, carry) = Matrix::Identity(carry, carry);

    Matrix bt = Matrix::Zero(ntNext, m);
    bt.topRows(n) = plant.b;

    Matrix ct = Matrix::Zero(ntNext, n);
    ct.topRows(n) = Matrix::Identity(n, n);

    sys.aTilde_.push_back(std::move(at));
    sys.bTilde_.push_back(std::move(bt));
    sys.cTilde_.push_back(std::move(ct));
  }
  return sys;
}

Eigen::Index AugmentedSystem::dim(int t) const {
  if (t < 0 || t > horizon_) {
    throw InvalidInputError("augmentation: stage out of range");
  }
  return n_ * (std::min(k_, t) + 1);
}

int AugmentedSystem::memoryAt(int t) const {
  if (t < 0 || t > horizon_) {
    throw InvalidInputError("augmentation: stage out of range");
  }
  return std::min(k_, t);
}

const Matrix& AugmentedSystem::aTilde(int t) const {
  if (t < 0 || t >= horizon_) {
    throw InvalidInputError("augmentation: stage map index out of range");
  }
  return aTilde_[static_cast<std::size_t>(t)];
}

const Matrix& AugmentedSystem::bTilde(int t) const {
  if (t < 0 || t >= horizon_) {
    throw InvalidInputError("augmentation: stage map index out of range");
  }
  return bTilde_[static_cast<std::size_t>(t)];
}

const Matrix& AugmentedSystem::cTilde(int t) const {
  if (t < 0 || t >= horizon_) {
    throw InvalidInputError("augmentation: stage map index out of range");
  }
  return cTilde_[static_cast<std::size_t>(t)];
}

Vector AugmentedSystem::step(int t, const Eigen::Ref<const Vector>& eta,
                             const Eigen::Ref<const Vector>& u,
                             const Eigen::Ref<const Vector>& w) const {
  if (t < 0 || t >= horizon_) {
    throw InvalidInputError("augmentation step: stage out of range");
  }
  if (eta.size() != dim(t)) {
    throw InvalidInputError("augmentation step: history has wrong length, got " +
                            std::to_string(eta.size()) + " want " +
                            std::to_string(dim(t)));
  }
  if (u.size() != m_ || w.size() != n_) {
    throw InvalidInputError("augmentation step: input/noise dimension mismatch");
  }
  const Eigen::Index ntNext = dim(t + 1);
  Vector out(ntNext);
  out.head(n_) = a_ * eta.head(n_) + b_ * u + w;
  out.tail(ntNext - n_) = eta.head(ntNext - n_);
  return out;
}

Vector initialEta(const PlantModel& plant) {
  plant.validate();
  return plant.x0;
}

}  // namespace tclqr
