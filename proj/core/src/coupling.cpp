#include "tclqr/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tclqr/errors.hpp"

namespace tclqr {

namespace {

void requireSymmetricPsdBlock(const Matrix& m, const std::string& what) {
  requireFinite(m, what);
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInputError(what + ": must be square and non-empty");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (symmetryError(m) > 1e-10 * scale) {
    throw InvalidInputError(what + ": must be symmetric");
  }
  if (!isPsd(m)) {
    throw InvalidInputError(what + ": must be PSD");
  }
}

}  // namespace

void CouplingSpec::finalize() {
  const int kp1 = k_ + 1;
  zero_.assign(static_cast<std::size_t>(kp1) * kp1, 0);
  for (int i = 0; i < kp1; ++i) {
    for (int j = 0; j < kp1; ++j) {
      const Matrix& b = blocks_[static_cast<std::size_t>(i) * kp1 + j];
      zero_[static_cast<std::size_t>(i) * kp1 + j] =
          b.isZero(0.0) ? 1 : 0;
    }
  }
  const Matrix full = assembled();
  const double scale = std::max(1.0, full.cwiseAbs().maxCoeff());
  if (symmetryError(full) > 1e-10 * scale) {
    throw InvalidInputError("coupling grid is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(full, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("coupling grid: eigenvalue computation failed");
  }
  const double minEig = eig.eigenvalues().minCoeff();
  if (minEig < -1e-9 * scale) {
    throw InvalidInputError(
        "coupling grid is not PSD (smallest eigenvalue " +
        std::to_string(minEig) + ")");
  }
}

CouplingSpec CouplingSpec::general(std::vector<std::vector<Matrix>> blocks) {
  if (blocks.empty()) {
    throw InvalidInputError("coupling grid: empty block grid");
  }
  const std::size_t kp1 = blocks.size();
  for (const auto& row : blocks) {
    if (row.size() != kp1) {
      throw InvalidInputError("coupling grid: block grid must be square");
    }
  }
  const Eigen::Index n = blocks[0][0].rows();
  if (n == 0) {
    throw InvalidInputError("coupling grid: state dimension must be positive");
  }
  for (const auto& row : blocks) {
    for (const auto& b : row) {
      if (b.rows() != n || b.cols() != n) {
        throw InvalidInputError("coupling grid: every block must be " +
                                std::to_string(n) + "x" + std::to_string(n));
      }
      requireFinite(b, "coupling block");
    }
  }
  CouplingSpec spec(n, static_cast<int>(kp1) - 1);
  spec.blocks_.reserve(kp1 * kp1);
  for (auto& row : blocks) {
    for (auto& b : row) spec.blocks_.push_back(std::move(b));
  }
  spec.finalize();
  return spec;
}

CouplingSpec CouplingSpec::oneStep(const Matrix& q, const Matrix& qbar) {
  requireSymmetricPsdBlock(q, "one-step coupling q");
  requireSymmetricPsdBlock(qbar, "one-step coupling qbar");
  if (q.rows() != qbar.rows()) {
    throw InvalidInputError("one-step coupling: q and qbar dimension mismatch");
  }
  std::vector<std::vector<Matrix>> blocks(2, std::vector<Matrix>(2));
  blocks[0][0] = q + qbar;
  blocks[0][1] = -qbar;
  blocks[1][0] = -qbar;
  blocks[1][1] = qbar;
  return general(std::move(blocks));
}

CouplingSpec CouplingSpec::differencePenalty(const Matrix& q, double beta,
                                             int k) {
  requireSymmetricPsdBlock(q, "difference coupling q");
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw InvalidInputError("difference coupling: beta must be >= 0");
  }
  if (k < 0) {
    throw InvalidInputError("difference coupling: k must be >= 0");
  }
  const Eigen::Index n = q.rows();
  const int kp1 = k + 1;
  std::vector<std::vector<Matrix>> blocks(
      kp1, std::vector<Matrix>(kp1, Matrix::Zero(n, n)));
  blocks[0][0] = (1.0 + beta * k) * q;
  for (int i = 1; i <= k; ++i) {
    blocks[0][i] = -beta * q;
    blocks[i][0] = -beta * q;
    blocks[i][i] = beta * q;
  }
  return general(std::move(blocks));
}

const Matrix& CouplingSpec::block(int i, int j) const {
  if (i < 0 || j < 0 || i > k_ || j > k_) {
    throw InvalidInputError("coupling block index out of range");
  }
  return blocks_[static_cast<std::size_t>(i) * (k_ + 1) + j];
}

bool CouplingSpec::blockIsZero(int i, int j) const {
  if (i < 0 || j < 0 || i > k_ || j > k_) {
    throw InvalidInputError("coupling block index out of range");
  }
  return zero_[static_cast<std::size_t>(i) * (k_ + 1) + j] != 0;
}

Matrix CouplingSpec::assembled() const { return truncated(k_); }

Matrix CouplingSpec::truncated(int kt) const {
  if (n_ == 0) {
    throw InvalidInputError("coupling grid: empty spec");
  }
  if (kt < 0 || kt > k_) {
    throw InvalidInputError("coupling truncation out of range");
  }
  const Eigen::Index nt = n_ * (kt + 1);
  Matrix out(nt, nt);
  for (int i = 0; i <= kt; ++i) {
    for (int j = 0; j <= kt; ++j) {
      out.block(i * n_, j * n_, n_, n_) =
          blocks_[static_cast<std::size_t>(i) * (k_ + 1) + j];
    }
  }
  return out;
}

StagePenalty stagePenalty(const CouplingSpec& spec, int t, double lambda,
                          const NoiseMoments& moments) {
  if (spec.stateDim() == 0) {
    throw InvalidInputError("stage penalty: empty coupling spec");
  }
  if (t < 0) {
    throw InvalidInputError("stage penalty: stage must be >= 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInputError("stage penalty: lambda must be >= 0");
  }
  const Eigen::Index n = spec.stateDim();
  if (moments.q00Used.rows() != n || moments.q00Used.cols() != n ||
      !(moments.q00Used.array() == spec.block(0, 0).array()).all()) {
    throw InvalidInputError(
        "stage penalty: noise moments were computed against a different "
        "newest-state block");
  }
  if (moments.centralCov.rows() != n || moments.mean.size() != n ||
      moments.gamma.size() != n) {
    throw InvalidInputError("stage penalty: moment dimensions mismatch");
  }

  StagePenalty out;
  out.t = t;
  out.kt = std::min(spec.memory(), t);
  out.nt = n * (out.kt + 1);
  out.historyCost = spec.truncated(out.kt);

  // H_t = 4 Qbar^T Sigma Qbar with Qbar = [Q00 ... Q0kt].
  Matrix qbar(n, out.nt);
  for (int i = 0; i <= out.kt; ++i) {
    qbar.middleCols(i * n, n) = spec.block(0, i);
  }
  out.riskHessian = symmetrize(4.0 * qbar.transpose() *
                               (moments.centralCov * qbar));

  // zeta_t stacks 4 Q_{i0} gamma = 4 Q0i^T gamma.
  out.riskLinear = 4.0 * qbar.transpose() * moments.gamma;

  out.inflatedCost = out.historyCost + lambda * out.riskHessian;
  return out;
}

double sequentialEnergy(const CouplingSpec& spec,
                        const Eigen::Ref<const Vector>& eta, int t) {
  if (t < 0) {
    throw InvalidInputError("sequential energy: stage must be >= 0");
  }
  const Eigen::Index n = spec.stateDim();
  if (n == 0) {
    throw InvalidInputError("sequential energy: empty coupling spec");
  }
  const int kt = std::min(spec.memory(), t);
  if (eta.size() != n * (kt + 1)) {
    throw InvalidInputError("sequential energy: history has wrong length");
  }
  double z = 0.0;
  for (int i = 0; i <= kt; ++i) {
    const auto xi = eta.segment(i * n, n);
    if (!spec.blockIsZero(i, i)) {
      z += xi.dot(spec.block(i, i) * xi);
    }
    for (int j = i + 1; j <= kt; ++j) {
      if (spec.blockIsZero(i, j)) continue;
      z += 2.0 * xi.dot(spec.block(i, j) * eta.segment(j * n, n));
    }
  }
  return z;
}

}  // namespace tclqr
