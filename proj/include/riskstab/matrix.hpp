#pragma once

#include <Eigen/Dense>

#include "riskstab/errors.hpp"

namespace riskstab::mat {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative tolerance used to classify eigenvalues of a symmetric matrix.
// Absolute thresholds scale with max(1, ||M||_F).
inline constexpr double kDefaultPsdTol = 1e-9;

// Entrywise asymmetry beyond this (relative) is rejected outright.
inline constexpr double kSymmetryTol = 1e-12;

// Spectral radius must stay below 1 by at least this margin for the
// discrete Lyapunov solve to be attempted.
inline constexpr double kSchurMargin = 1e-10;

// Square matrix with finite entries. Thin validated wrapper; the payload is
// exposed as an Eigen matrix for arithmetic.
class SquareMatrix {
 public:
  explicit SquareMatrix(MatrixXd m);
  const MatrixXd& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  MatrixXd m_;
};

// Symmetric matrix. Construction rejects asymmetry beyond kSymmetryTol
// (relative, entrywise) and non-finite entries. Eigenvalue classification
// uses psd_tol relative to max(1, ||M||_F).
class SymMatrix {
 public:
  explicit SymMatrix(MatrixXd m, double psd_tol = kDefaultPsdTol);

  const MatrixXd& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double psd_tol() const { return psd_tol_; }
  // Absolute classification threshold: psd_tol * max(1, ||M||_F).
  double abs_tol() const;

  static SymMatrix identity(Eigen::Index n, double psd_tol = kDefaultPsdTol);
  // Symmetrizes (m + m^T)/2 before constructing; for results of arithmetic
  // that is symmetric in exact arithmetic but not in floating point.
  static SymMatrix from_nearly(const MatrixXd& m,
                               double psd_tol = kDefaultPsdTol);

 private:
  MatrixXd m_;
  double psd_tol_;
};

// Eigendecomposition of a symmetric matrix: M = V diag(w) V^T with w
// ascending and V orthonormal.
struct EigenDecomp {
  VectorXd eigenvalues;
  MatrixXd eigenvectors;
};

EigenDecomp eig_sym(const SymMatrix& m);

double lambda_min(const SymMatrix& m);
double lambda_max(const SymMatrix& m);

// lambda_min(M) > abs_tol resp. lambda_min(M) >= -abs_tol.
bool is_pd(const SymMatrix& m);
bool is_psd(const SymMatrix& m);

// Symmetric PSD square root: S with S^T S = M. Eigenvalues within the
// classification tolerance of zero are clamped to zero before rooting;
// eigenvalues below -abs_tol raise NotPsd.
SymMatrix sym_sqrt(const SymMatrix& m);

// (M^{1/2})^T H M^{1/2}, symmetrized. Preserves positive definiteness when
// both H and M are PD.
SymMatrix conjugate(const SymMatrix& h, const SymMatrix& m);

// Largest eigenvalue modulus of a general square matrix.
double spectral_radius(const SquareMatrix& a);

// Unique X solving X - A^T X A = Q for Schur-stable A, via the dense
// Kronecker system (I - A^T (x) A^T) vec(X) = vec(Q). Postcondition:
// ||X - A^T X A - Q||_F <= 1e-10 * max(1, ||Q||_F), X symmetric, and PD
// whenever Q is PD.
SymMatrix solve_discrete_lyapunov(const SquareMatrix& a, const SymMatrix& q);

}  // namespace riskstab::mat
