#pragma once

#include <vector>

#include "vlqr/grid.hpp"
#include "vlqr/problem.hpp"

namespace vlqr {

/// Fundamental solution of the uncontrolled equation as a function of
/// the lag only: Z0[j] ~ Z(t_j) with Z' = int_0^t Z(xi) N(t - xi) dxi,
/// Z(0) = I. The two-argument kernel is Z(t, tau) = Z0(t - tau).
struct Resolvent {
  Grid grid;
  std::vector<Matrix> Z0;
};

Resolvent compute_resolvent(const LQProblem& p, const Grid& g);

/// History influence kernel Y(t, s; tau) = int_tau^t Z0(t - xi) N(xi - s) dxi
/// evaluated at nodes t = t_j, s = t_i, tau = t_a, by trapezoid in xi.
/// Requires i <= a <= j.
Matrix history_kernel(const LQProblem& p, const Resolvent& r, int j, int i, int a);

/// Node samples x[k - start] ~ x(t_k) for k = start..start+size-1.
struct Trajectory {
  Grid grid;
  int start = 0;
  std::vector<Vector> x;
};

/// Node samples u[k - start] ~ u(t_k).
struct ControlSignal {
  Grid grid;
  int start = 0;
  std::vector<Vector> u;
};

ControlSignal zero_control(const Grid& g, int start, int m);

/// Integrate the state equation from `state` (tau node-aligned) to t_end,
/// end = grid.M by default. The control must cover [tau, t_end]. Explicit
/// trapezoid (Heun) stepping with trapezoid memory sums; throws
/// NumericalError if the state leaves the finite range.
Trajectory simulate(const LQProblem& p, const Grid& g, const StatePair& state,
                    const ControlSignal& u, int end = -1);

/// Advance the state pair to tau1 >= tau (both node-aligned): the history
/// on [0, tau] is kept bit-identically, newly simulated samples extend it,
/// and the head becomes x(tau1).
StatePair evolve(const LQProblem& p, const Grid& g, const StatePair& state,
                 const ControlSignal& u, double tau1);

/// Trapezoid of x*Qx + |u|^2 over the trajectory's span plus the terminal
/// cost x(T)*Q0 x(T). Requires x to reach t_M and u to cover its span.
double cost(const LQProblem& p, const Trajectory& x, const ControlSignal& u);

}  // namespace vlqr
