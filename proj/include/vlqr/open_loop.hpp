#pragma once

#include <Eigen/LU>
#include <vector>

#include "vlqr/volterra.hpp"

namespace vlqr {

/// Costate samples p[k - start] ~ p(t_k) on [tau, T].
struct AdjointTrajectory {
  Grid grid;
  int start = 0;
  std::vector<Vector> p;
};

/// Closed-form adjoint
///   p(t) = int_t^T Z0*(s-t) Q x(s) ds + Z0*(T-t) Q0 x(T),
/// evaluated by trapezoid at every node of the trajectory's span.
AdjointTrajectory solve_adjoint(const LQProblem& p, const Resolvent& r,
                                const Trajectory& x);

/// Discrete Fredholm system (I + G W) u = rhs(state) for the optimal
/// control on [tau, T]; W is the diagonal of trapezoid weights and G the
/// symmetric PSD Nystrom kernel matrix. The factorization is cached so
/// many states can be solved against one assembly.
struct FredholmSystem {
  Grid grid;
  int tau_index = 0;
  int n = 0;
  int m = 0;
  Matrix op;            // I + G W
  Matrix weighted_sym;  // I + W^{1/2} G W^{1/2}, symmetric PSD shift
  Eigen::PartialPivLU<Matrix> lu;
};

FredholmSystem assemble_fredholm(const LQProblem& p, const Resolvent& r, int tau_index);

/// Right-hand side -B* [Z0*(T-t) Q0 F(T) + int_t^T Z0*(s-t) Q F(s) ds]
/// at each node, where F is the uncontrolled response of `state`.
Vector fredholm_rhs(const FredholmSystem& sys, const LQProblem& p,
                    const Resolvent& r, const StatePair& state);

/// Solve the cached system for one state; stacked samples unpacked to a
/// ControlSignal on [tau, T].
ControlSignal solve_open_loop(const FredholmSystem& sys, const LQProblem& p,
                              const Resolvent& r, const StatePair& state);

/// One-call wrapper: assemble at state.tau and solve.
ControlSignal optimal_control_open_loop(const LQProblem& p, const Resolvent& r,
                                        const Grid& g, const StatePair& state);

/// Optimal cost-to-go W(tau; state) via the open-loop control.
double value_function(const LQProblem& p, const Resolvent& r, const Grid& g,
                      const StatePair& state);

/// Columns of the optimal control and closed-loop state as linear maps of
/// the initial data at tau: head basis vectors e_k and unit tail samples
/// (divided by their trapezoid weight, so the map acts on tail integrals).
struct InfluenceMatrices {
  Grid grid;
  int tau_index = 0;
  std::vector<Matrix> Phi1;               // [j - a]: m x n, head -> u(t_j)
  std::vector<std::vector<Matrix>> Phi2;  // [j - a][i]: m x n, tail node i -> u(t_j)
  std::vector<Matrix> Z1;                 // [j - a]: n x n, head -> x(t_j)
  std::vector<std::vector<Matrix>> Z2;    // [j - a][i]: n x n, tail node i -> x(t_j)
};

InfluenceMatrices influence_matrices(const LQProblem& p, const Resolvent& r,
                                     const Grid& g, int tau_index);

/// W(tau; X) assembled as an explicit quadratic form
///   x_hat* P0 x_hat + 2 x_hat* int P1(tau,s) x_tail(s) ds
///   + int int x_tail(xi)* K(tau,xi,r)... (double trapezoid)
/// from the influence matrices. K is stored on l <= i; K(tau,xi,r) for
/// r > xi is the transpose block.
struct QuadraticFormAtTau {
  Grid grid;
  int tau_index = 0;
  Matrix P0;
  std::vector<Matrix> P1;              // [i]: n x n, i = 0..a
  std::vector<std::vector<Matrix>> K;  // [i][l]: n x n, l <= i
};

QuadraticFormAtTau assemble_quadratic_form(const LQProblem& p, const Resolvent& r,
                                           const Grid& g, int tau_index);

/// Evaluate the assembled form on a state at the same tau node.
double eval_quadratic_form(const QuadraticFormAtTau& w, const StatePair& state);

}  // namespace vlqr
