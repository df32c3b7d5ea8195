#pragma once

#include "vlqr/types.hpp"

namespace vlqr {

/// Solve A x = b by partial-pivot LU. Throws NumericalError when the
/// estimated reciprocal condition number drops below 1e-14.
Vector solve_dense(const Matrix& A, const Vector& b);

/// Multi-RHS variant of solve_dense.
Matrix solve_dense(const Matrix& A, const Matrix& B);

/// Smallest eigenvalue of a symmetric matrix (symmetrized internally).
double min_symmetric_eigenvalue(const Matrix& S);

}  // namespace vlqr
