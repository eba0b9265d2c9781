#pragma once

#include <Eigen/Dense>
#include <string>

namespace tclqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws InvalidInputError if any entry is NaN or infinite.  Vectors bind as
// single-column matrices.
void requireFinite(const Eigen::Ref<const Matrix>& m, const std::string& what);

// max |m - m^T| entry, 0 for empty matrices.
double symmetryError(const Eigen::Ref<const Matrix>& m);

// (m + m^T) / 2.  Input must be square.
Matrix symmetrize(const Eigen::Ref<const Matrix>& m);

// Block-diagonal stacking [a 0; 0 b].  Either argument may be 0x0.
Matrix directSum(const Eigen::Ref<const Matrix>& a,
                 const Eigen::Ref<const Matrix>& b);

// True iff the symmetric matrix m has min eigenvalue >= -tol * max(1, |m|_max).
// Throws InvalidInputError when m is not square or not symmetric to 1e-12
// relative.
bool isPsd(const Eigen::Ref<const Matrix>& m, double tol = 1e-9);

// Solves m * x = rhs for symmetric positive definite m via Cholesky.
// Throws SingularityError (annotated with `stage`) when the factorization
// fails.
Matrix solveSpd(const Eigen::Ref<const Matrix>& m,
                const Eigen::Ref<const Matrix>& rhs, int stage = -1);

// Symmetric PSD square root via eigendecomposition, clamping eigenvalues
// below zero.  Used to turn covariance matrices into sampling maps.
Matrix psdSqrt(const Eigen::Ref<const Matrix>& m);

}  // namespace tclqr
