#pragma once

#include <vector>

#include "vlqr/volterra.hpp"

namespace vlqr {

struct RiccatiOptions {
  /// Keep every tau-level of the triangular kernel K. Needed by
  /// riccati_residual; costs O(M^3 n^2 / 6) doubles, so large grids can
  /// switch it off (sup|K| is tracked streamingly either way).
  bool store_kernel_history = true;
};

/// Backward solution of the Riccati system on the triangle
/// 0 <= r <= xi <= tau <= T, sampled at grid nodes. Block storage is flat
/// and column-major: level j holds P1(tau_j, t_i) for i <= j and
/// K(tau_j, t_i, t_l) for l <= i <= j; K for r > xi is the transpose block.
class RiccatiSolution {
 public:
  RiccatiSolution(Grid grid, int n, bool kernel_history);

  const Grid& grid() const { return grid_; }
  int n() const { return n_; }
  bool has_kernel_history() const { return has_kernel_; }

  Eigen::Map<const Matrix> P0(int j) const;
  Eigen::Map<Matrix> P0_mut(int j);
  Eigen::Map<const Matrix> P1(int j, int i) const;
  Matrix K(int j, int i, int l) const;

  /// sup over all levels of max|K| entries (tracked during the solve,
  /// available without kernel history).
  double kernel_sup() const { return kernel_sup_; }
  double& kernel_sup() { return kernel_sup_; }

  double* p0_data(int j);
  double* p1_data(int j);
  double* k_data(int j);
  const double* p0_data(int j) const;
  const double* p1_data(int j) const;
  const double* k_data(int j) const;

 private:
  Grid grid_;
  int n_ = 0;
  bool has_kernel_ = false;
  double kernel_sup_ = 0.0;
  std::vector<double> p0_, p1_, k_;
  std::vector<std::size_t> k_off_;
};

/// Integrate the coupled system backward from tau = T with the final
/// conditions P0 = Q0, P1 = 0, K = 0, by the same explicit trapezoid
/// scheme as the simulator. P0 is re-symmetrized every step. Throws
/// NumericalError on non-finite values (finite-escape reporting).
RiccatiSolution solve_riccati(const LQProblem& p, const Grid& g,
                              const RiccatiOptions& opts = {});

/// Feedback law u = -B* [P0(tau) x_hat + int_0^tau P1(tau, s) x_tail(s) ds].
Vector feedback_control(const LQProblem& p, const RiccatiSolution& sol,
                        const StatePair& state);

struct ClosedLoopResult {
  Trajectory x;
  ControlSignal u;
  double cost = 0.0;
};

/// Simulate from a head-only state at tau = 0 under the feedback law,
/// evaluating the feedback inside the predictor and corrector stages.
ClosedLoopResult closed_loop_simulate(const LQProblem& p, const RiccatiSolution& sol,
                                      const Vector& x0);

/// Sup-norms over interior tau nodes of the three Riccati lines, with
/// d/dtau replaced by central differences on the stored solution.
/// Requires kernel history.
struct RiccatiResidual {
  double p0 = 0.0;
  double p1 = 0.0;
  double k = 0.0;
};

RiccatiResidual riccati_residual(const LQProblem& p, const RiccatiSolution& sol);

}  // namespace vlqr
