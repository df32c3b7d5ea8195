#pragma once

#include <cstdint>
#include <optional>

#include "vlqr/open_loop.hpp"
#include "vlqr/riccati.hpp"

namespace vlqr {

/// Fully discrete LQ problem over stacked control samples on [tau, T]:
/// minimize (f + G u)* Qhat (f + G u) + u* R u, where G maps control
/// samples to state samples through an internal stepper that shares only
/// problem evaluation and the grid with the continuous pipelines.
struct DiscreteLQ {
  Grid grid;
  int tau_index = 0;
  int n = 0;
  int m = 0;
  Matrix G;        // state samples per control sample
  Vector f;        // uncontrolled response, stacked
  Matrix hessian;  // R + G* Qhat G, SPD
  Vector rhs;      // -G* Qhat f
  std::vector<double> state_weights;  // trapezoid weights incl. terminal Q0 slot
};

DiscreteLQ build_discrete_lq(const LQProblem& p, const Grid& g, const StatePair& state);

/// Discrete cost of any stacked candidate control.
double discrete_cost(const LQProblem& p, const DiscreteLQ& d, const Vector& u_stacked);

/// Exact minimizer of the discrete cost (normal equations, Cholesky).
struct DiscreteOptimum {
  ControlSignal u;
  double cost = 0.0;
};

DiscreteOptimum discrete_optimal_control(const LQProblem& p, const Grid& g,
                                         const StatePair& state);

/// Compare the analytic gradient 2(u + B* p) of the discrete cost against
/// central finite differences along random directions.
struct GradientReport {
  double max_abs_gradient = 0.0;   // sup norm of the analytic gradient
  double max_deviation = 0.0;      // worst |<g,d> - fd| / max(1, |fd|)
};

GradientReport gradient_check(const LQProblem& p, const Resolvent& r, const Grid& g,
                              const StatePair& state, const ControlSignal& u,
                              int directions = 10, std::uint64_t seed = 0);

/// Local-optimality inequality W(tau; X) <= running cost of u1 on
/// [tau, tau1] + W(tau1; X1). Reports both sides and the slack rhs - lhs.
struct LoiReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

LoiReport verify_loi(const LQProblem& p, const Resolvent& r, const Grid& g,
                     const StatePair& state, const ControlSignal& u1, double tau1);

/// Cross-validation of the three routes from one initial condition.
struct ComparisonReport {
  double T = 0.0;
  int M = 0;
  double cost_open_loop = 0.0;
  double cost_riccati = 0.0;
  double cost_oracle = 0.0;
  double dist_open_loop_riccati = 0.0;  // sup over shared nodes
  double dist_open_loop_oracle = 0.0;
  double dist_riccati_oracle = 0.0;
  double value_open_loop = 0.0;   // W via value_function
  double value_riccati = 0.0;     // x0* P0(0) x0
  double value_oracle = 0.0;      // discrete minimum
  std::optional<RiccatiResidual> residuals;
};

struct CompareOptions {
  /// Evaluate riccati_residual (needs the kernel history; O(M^3) memory).
  bool with_residuals = false;
};

ComparisonReport compare_all(const LQProblem& p, const Grid& g, const Vector& x0,
                             const CompareOptions& opts = {});

}  // namespace vlqr
