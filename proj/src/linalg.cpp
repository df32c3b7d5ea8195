#include "vlqr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace vlqr {

namespace {

// Reciprocal condition estimate from the LU factors: ratio of the
// smallest to largest |diagonal| of U. Cheap and adequate for the
// singularity guard; a zero pivot maps to rcond 0.
double rcond_estimate(const Eigen::PartialPivLU<Matrix>& lu) {
  const auto diag = lu.matrixLU().diagonal().cwiseAbs();
  const double dmax = diag.maxCoeff();
  if (dmax == 0.0) return 0.0;
  return diag.minCoeff() / dmax;
}

void check_solvable(const Eigen::PartialPivLU<Matrix>& lu) {
  const double rc = rcond_estimate(lu);
  if (!(rc > 1e-14)) {
    throw NumericalError("solve_dense: matrix is singular to working precision (rcond ~ " +
                         std::to_string(rc) + ")");
  }
}

}  // namespace

Vector solve_dense(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw NumericalError("solve_dense: dimension mismatch");
  }
  Eigen::PartialPivLU<Matrix> lu(A);
  check_solvable(lu);
  return lu.solve(b);
}

Matrix solve_dense(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols() || A.rows() != B.rows()) {
    throw NumericalError("solve_dense: dimension mismatch");
  }
  Eigen::PartialPivLU<Matrix> lu(A);
  check_solvable(lu);
  return lu.solve(B);
}

double min_symmetric_eigenvalue(const Matrix& S) {
  Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace vlqr
