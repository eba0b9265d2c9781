#include "tclqr/linalg.hpp"

#include <cmath>

#include "tclqr/errors.hpp"

namespace tclqr {

void requireFinite(const Eigen::Ref<const Matrix>& m, const std::string& what) {
  if (!m.allFinite()) {
    throw InvalidInputError(what + ": non-finite entry");
  }
}

double symmetryError(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

Matrix symmetrize(const Eigen::Ref<const Matrix>& m) {
  if (m.rows() != m.cols()) {
    throw InvalidInputError("symmetrize: matrix must be square");
  }
  return 0.5 * (m + m.transpose());
}

Matrix directSum(const Eigen::Ref<const Matrix>& a,
                 const Eigen::Ref<const Matrix>& b) {
  requireFinite(a, "direct_sum lhs");
  requireFinite(b, "direct_sum rhs");
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

bool isPsd(const Eigen::Ref<const Matrix>& m, double tol) {
  if (m.rows() != m.cols()) {
    throw InvalidInputError("is_psd: matrix must be square");
  }
  requireFinite(m, "is_psd");
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (symmetryError(m) > 1e-12 * scale) {
    throw InvalidInputError("is_psd: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("is_psd: eigenvalue computation failed");
  }
  return eig.eigenvalues().minCoeff() >= -tol * scale;
}

Matrix solveSpd(const Eigen::Ref<const Matrix>& m,
                const Eigen::Ref<const Matrix>& rhs, int stage) {
  if (m.rows() != m.cols()) {
    throw InvalidInputError("solve_spd: matrix must be square");
  }
  if (m.rows() != rhs.rows()) {
    throw InvalidInputError("solve_spd: rhs row count mismatch");
  }
  requireFinite(m, "solve_spd matrix");
  requireFinite(rhs, "solve_spd rhs");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SingularityError(
        stage >= 0 ? "solve_spd: matrix not positive definite at stage " +
                         std::to_string(stage)
                   : "solve_spd: matrix not positive definite",
        stage);
  }
  return llt.solve(rhs);
}

Matrix psdSqrt(const Eigen::Ref<const Matrix>& m) {
  if (m.rows() != m.cols()) {
    throw InvalidInputError("psd_sqrt: matrix must be square");
  }
  requireFinite(m, "psd_sqrt");
  if (m.size() == 0) return m;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (symmetryError(m) > 1e-10 * scale) {
    throw InvalidInputError("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("psd_sqrt: eigenvalue computation failed");
  }
  const Vector lam = eig.eigenvalues();
  if (lam.minCoeff() < -1e-8 * scale) {
    throw InvalidInputError("psd_sqrt: matrix has negative eigenvalue " +
                            std::to_string(lam.minCoeff()));
  }
  return eig.eigenvectors() *
         lam.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace tclqr
