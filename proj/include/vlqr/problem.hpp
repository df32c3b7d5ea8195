#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "vlqr/types.hpp"

namespace vlqr {

/// Convolution kernel N(t), n x n, evaluated for lags t in [0, T].
struct KernelSpec {
  struct Zero {};
  struct Constant {
    Matrix value;
  };
  /// N(t) = sum_k coeffs[k] * t^k.
  struct Polynomial {
    std::vector<Matrix> coeffs;
  };
  /// N(t) = sum_k terms[k].second * exp(-terms[k].first * t).
  struct ExpPoly {
    std::vector<std::pair<double, Matrix>> terms;
  };
  /// Piecewise-linear interpolation of node samples; abscissae must be
  /// strictly increasing, start at 0, and cover the horizon.
  struct Samples {
    std::vector<double> times;
    std::vector<Matrix> values;
  };

  std::variant<Zero, Constant, Polynomial, ExpPoly, Samples> form = Zero{};

  static KernelSpec zero() { return {}; }
  static KernelSpec constant(Matrix value);
  static KernelSpec polynomial(std::vector<Matrix> coeffs);
  static KernelSpec exp_poly(std::vector<std::pair<double, Matrix>> terms);
  static KernelSpec samples(std::vector<double> times, std::vector<Matrix> values);
};

/// N(t) for t >= 0; a negative argument beyond round-off is rejected.
/// Sample kernels clamp t to the tabulated range within 1e-12.
Matrix eval_kernel(const KernelSpec& kernel, double t, int n);

struct LQProblem {
  int n = 0;
  int m = 0;
  double T = 0.0;
  KernelSpec kernel;
  Matrix B;   // n x m
  Matrix Q;   // n x n, symmetric PSD
  Matrix Q0;  // n x n, symmetric PSD

  Matrix kernel_at(double t) const { return eval_kernel(kernel, t, n); }
};

/// Check dimensions, horizon, kernel shape, and PSD-ness of Q, Q0
/// (eigenvalues >= -1e-10 * spectral norm). Nearly-symmetric weights
/// are replaced by (W + W^T)/2; the returned problem passes validation
/// unchanged. Throws InvalidProblem otherwise.
LQProblem validate_problem(LQProblem p);

/// State of the memory system at time tau: current value x_hat plus the
/// history samples x_tail at grid nodes 0..index(tau). The tail is empty
/// exactly when tau == 0; a trajectory-generated state has
/// x_tail.back() == x_hat.
struct StatePair {
  double tau = 0.0;
  Vector x_hat;
  std::vector<Vector> x_tail;
};

/// Head-only state at tau = 0.
StatePair initial_state(Vector x0);

}  // namespace vlqr
