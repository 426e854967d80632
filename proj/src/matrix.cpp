#include "riskstab/matrix.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

namespace riskstab::mat {
namespace {

void require_finite(const MatrixXd& m, const char* who) {
  if (!m.allFinite()) {
    throw Error(std::string(who) + ": matrix has non-finite entries");
  }
}

void require_square(const MatrixXd& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimMismatch(std::string(who) + ": expected a nonempty square matrix, got " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

SquareMatrix::SquareMatrix(MatrixXd m) : m_(std::move(m)) {
  require_square(m_, "SquareMatrix");
  require_finite(m_, "SquareMatrix");
}

SymMatrix::SymMatrix(MatrixXd m, double psd_tol) : m_(std::move(m)), psd_tol_(psd_tol) {
  require_square(m_, "SymMatrix");
  require_finite(m_, "SymMatrix");
  if (psd_tol_ < 0.0) {
    throw Error("SymMatrix: psd_tol must be nonnegative");
  }
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m_.cols(); ++j) {
      const double gap = std::abs(m_(i, j) - m_(j, i));
      if (gap > kSymmetryTol * std::max(1.0, std::abs(m_(i, j)))) {
        throw NonSymmetric("SymMatrix: entry (" + std::to_string(i) + "," +
                           std::to_string(j) + ") differs from its mirror by " +
                           std::to_string(gap));
      }
    }
  }
  // Exact symmetry downstream; the asymmetry just checked is below tolerance.
  m_ = ((m_ + m_.transpose()) * 0.5).eval();
}

double SymMatrix::abs_tol() const {
  return psd_tol_ * std::max(1.0, m_.norm());
}

SymMatrix SymMatrix::identity(Eigen::Index n, double psd_tol) {
  return SymMatrix(MatrixXd::Identity(n, n), psd_tol);
}

SymMatrix SymMatrix::from_nearly(const MatrixXd& m, double psd_tol) {
  require_square(m, "SymMatrix::from_nearly");
  require_finite(m, "SymMatrix::from_nearly");
  return SymMatrix(((m + m.transpose()) * 0.5).eval(), psd_tol);
}

EigenDecomp eig_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success) {
    throw NonConvergence("eig_sym: symmetric eigensolver failed to converge");
  }
  return EigenDecomp{es.eigenvalues(), es.eigenvectors()};
}

double lambda_min(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NonConvergence("lambda_min: symmetric eigensolver failed to converge");
  }
  return es.eigenvalues().minCoeff();
}

double lambda_max(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NonConvergence("lambda_max: symmetric eigensolver failed to converge");
  }
  return es.eigenvalues().maxCoeff();
}

bool is_pd(const SymMatrix& m) { return lambda_min(m) > m.abs_tol(); }

bool is_psd(const SymMatrix& m) { return lambda_min(m) >= -m.abs_tol(); }

SymMatrix sym_sqrt(const SymMatrix& m) {
  const EigenDecomp ed = eig_sym(m);
  const double tol = m.abs_tol();
  VectorXd w = ed.eigenvalues;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < -tol) {
      throw NotPsd("sym_sqrt: eigenvalue " + std::to_string(w(i)) +
                   " below -" + std::to_string(tol));
    }
    w(i) = w(i) < tol ? 0.0 : std::sqrt(w(i));
  }
  const MatrixXd s = ed.eigenvectors * w.asDiagonal() * ed.eigenvectors.transpose();
  return SymMatrix::from_nearly(s, m.psd_tol());
}

SymMatrix conjugate(const SymMatrix& h, const SymMatrix& m) {
  if (h.dim() != m.dim()) {
    throw DimMismatch("conjugate: H is " + std::to_string(h.dim()) + "x" +
                      std::to_string(h.dim()) + " but M is " +
                      std::to_string(m.dim()) + "x" + std::to_string(m.dim()));
  }
  const MatrixXd root = sym_sqrt(m).mat();
  return SymMatrix::from_nearly(root.transpose() * h.mat() * root, h.psd_tol());
}

double spectral_radius(const SquareMatrix& a) {
  Eigen::EigenSolver<MatrixXd> es(a.mat(), /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NonConvergence("spectral_radius: eigensolver failed to converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SymMatrix solve_discrete_lyapunov(const SquareMatrix& a, const SymMatrix& q) {
  if (a.dim() != q.dim()) {
    throw DimMismatch("solve_discrete_lyapunov: A is " + std::to_string(a.dim()) +
                      "x" + std::to_string(a.dim()) + " but Q is " +
                      std::to_string(q.dim()) + "x" + std::to_string(q.dim()));
  }
  const double rho = spectral_radius(a);
  if (!(rho < 1.0 - kSchurMargin)) {
    throw NotSchurStable("solve_discrete_lyapunov: spectral radius " +
                         std::to_string(rho) + " is not below 1");
  }

  const Eigen::Index n = a.dim();
  const MatrixXd at = a.mat().transpose();
  // vec(A^T X A) = (A^T (x) A^T) vec(X) for column-major vec.
  MatrixXd k(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) = at(i, j) * at;
    }
  }
  k = MatrixXd::Identity(n * n, n * n) - k;

  Eigen::PartialPivLU<MatrixXd> lu(k);
  const VectorXd vec_q = Eigen::Map<const VectorXd>(q.mat().data(), n * n);
  const VectorXd vec_x = lu.solve(vec_q);
  MatrixXd x = Eigen::Map<const MatrixXd>(vec_x.data(), n, n);
  x = ((x + x.transpose()) * 0.5).eval();

  const double residual = (x - a.mat().transpose() * x * a.mat() - q.mat()).norm();
  if (!x.allFinite() || residual > 1e-10 * std::max(1.0, q.mat().norm())) {
    throw SolveSingular("solve_discrete_lyapunov: residual " + std::to_string(residual) +
                        " exceeds tolerance (system near-singular)");
  }
  return SymMatrix(std::move(x), q.psd_tol());
}

}  // namespace riskstab::mat
