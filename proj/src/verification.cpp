#include "vlqr/verification.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

namespace vlqr {

namespace {

// The oracle's own forward stepper. Same grid and problem data as the
// continuous pipelines, but no shared code with the resolvent, Fredholm,
// or Riccati paths: plain node history plus weighted kernel sums.
struct OracleStepper {
  const LQProblem* p = nullptr;
  Grid g;
  std::vector<Matrix> N;  // N[d] = kernel at lag d*h
  int a = 0;                 // junction node of the run
  std::vector<Vector> tail;  // history samples 0..a; empty for impulse runs

  OracleStepper(const LQProblem& prob, const Grid& grid) : p(&prob), g(grid) {
    N.resize(static_cast<std::size_t>(g.M) + 1);
    for (int d = 0; d <= g.M; ++d) N[d] = prob.kernel_at(g.node(d));
  }

  // Split memory sum: trapezoid of the stored history over [0, tau] plus
  // trapezoid of the active samples over [tau, t_k]. Samples below `lo`
  // are known zero and skipped.
  Vector memory(const std::vector<Vector>& xs, int k, int lo) const {
    Vector acc = Vector::Zero(p->n);
    if (!tail.empty()) {
      for (int i = 0; i <= a; ++i) {
        const double w = (i == 0 || i == a) ? 0.5 * g.h : g.h;
        acc.noalias() += w * (N[k - i] * tail[i]);
      }
    }
    if (k > a) {
      for (int i = std::max(a, lo); i <= k; ++i) {
        const double w = (i == a || i == k) ? 0.5 * g.h : g.h;
        acc.noalias() += w * (N[k - i] * xs[i]);
      }
    }
    return acc;
  }

  // Advance xs from node `first` to M. Samples below `lo` are known zero.
  // u_of(k) returns the control sample at node k.
  template <typename UF>
  void run(std::vector<Vector>& xs, int first, int lo, UF&& u_of) const {
    const double h = g.h;
    for (int k = first; k < g.M; ++k) {
      const Vector d1 = memory(xs, k, lo) + p->B * u_of(k);
      xs[k + 1] = xs[k] + h * d1;
      const Vector d2 = memory(xs, k + 1, lo) + p->B * u_of(k + 1);
      xs[k + 1] = xs[k] + 0.5 * h * (d1 + d2);
      if (!xs[k + 1].allFinite()) {
        throw NumericalError("oracle state is non-finite at t = " +
                             std::to_string(g.node(k + 1)));
      }
    }
  }
};

int checked_tau_index(const Grid& g, const StatePair& state, const LQProblem& p) {
  const int a = g.index_of(state.tau);
  if (state.x_hat.size() != p.n) throw InvalidProblem("state head has wrong dimension");
  const std::size_t want = a == 0 ? 0 : static_cast<std::size_t>(a) + 1;
  if (state.x_tail.size() != want) throw InvalidProblem("state tail size does not match tau");
  return a;
}

}  // namespace

DiscreteLQ build_discrete_lq(const LQProblem& p, const Grid& g, const StatePair& state) {
  const int a = checked_tau_index(g, state, p);
  const int M = g.M, n = p.n, m = p.m;
  const int s_nodes = M - a + 1;
  OracleStepper stepper(p, g);
  stepper.a = a;

  DiscreteLQ d;
  d.grid = g;
  d.tau_index = a;
  d.n = n;
  d.m = m;
  d.state_weights = trapezoid_weights(a, M, g.h);

  // Uncontrolled response f.
  std::vector<Vector> xs(static_cast<std::size_t>(M) + 1, Vector::Zero(n));
  xs[a] = state.x_hat;
  stepper.tail = state.x_tail;
  stepper.run(xs, a, 0, [&](int) -> Vector { return Vector::Zero(m); });
  stepper.tail.clear();
  d.f.resize(static_cast<Eigen::Index>(s_nodes) * n);
  for (int k = a; k <= M; ++k) d.f.segment(static_cast<Eigen::Index>(k - a) * n, n) = xs[k];

  // G columns: response to a unit impulse in control component q at node k.
  d.G = Matrix::Zero(static_cast<Eigen::Index>(s_nodes) * n,
                     static_cast<Eigen::Index>(s_nodes) * m);
  for (int k = a; k <= M; ++k) {
    for (int q = 0; q < m; ++q) {
      std::vector<Vector> ys(static_cast<std::size_t>(M) + 1, Vector::Zero(n));
      const int first = std::max(a, k - 1);
      stepper.run(ys, first, k, [&](int j) -> Vector {
        Vector u = Vector::Zero(m);
        if (j == k) u(q) = 1.0;
        return u;
      });
      const Eigen::Index col = static_cast<Eigen::Index>(k - a) * m + q;
      for (int j = std::max(a, k); j <= M; ++j) {
        d.G.block(static_cast<Eigen::Index>(j - a) * n, col, n, 1) = ys[j];
      }
    }
  }

  // Normal equations for 1/2 of the cost Hessian: H = R + G* Qhat G.
  Matrix QG(d.G.rows(), d.G.cols());
  Vector Qf(d.f.size());
  for (int k = 0; k < s_nodes; ++k) {
    const Eigen::Index row = static_cast<Eigen::Index>(k) * n;
    Matrix W = d.state_weights[k] * p.Q;
    if (k == s_nodes - 1) W += p.Q0;
    QG.middleRows(row, n) = W * d.G.middleRows(row, n);
    Qf.segment(row, n) = W * d.f.segment(row, n);
  }
  d.hessian = d.G.transpose() * QG;
  for (int k = 0; k < s_nodes; ++k) {
    for (int q = 0; q < m; ++q) {
      d.hessian(static_cast<Eigen::Index>(k) * m + q, static_cast<Eigen::Index>(k) * m + q) +=
          d.state_weights[k];
    }
  }
  d.rhs = -d.G.transpose() * Qf;
  return d;
}

double discrete_cost(const LQProblem& p, const DiscreteLQ& d, const Vector& u_stacked) {
  if (u_stacked.size() != d.G.cols()) {
    throw InvalidProblem("discrete_cost: control vector has wrong size");
  }
  const Vector x = d.f + d.G * u_stacked;
  const int s_nodes = d.grid.M - d.tau_index + 1;
  double total = 0.0;
  for (int k = 0; k < s_nodes; ++k) {
    const auto xk = x.segment(static_cast<Eigen::Index>(k) * d.n, d.n);
    const auto uk = u_stacked.segment(static_cast<Eigen::Index>(k) * d.m, d.m);
    total += d.state_weights[k] * (xk.dot(p.Q * xk) + uk.squaredNorm());
  }
  const auto xT = x.tail(d.n);
  total += xT.dot(p.Q0 * xT);
  return total;
}

DiscreteOptimum discrete_optimal_control(const LQProblem& p, const Grid& g,
                                         const StatePair& state) {
  const DiscreteLQ d = build_discrete_lq(p, g, state);
  DiscreteOptimum out;
  if (d.tau_index == g.M) {
    // Zero-measure control interval: the cost does not depend on u.
    out.u = zero_control(g, g.M, p.m);
    out.cost = discrete_cost(p, d, Vector::Zero(p.m));
    return out;
  }
  Eigen::LLT<Matrix> llt(d.hessian);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("discrete normal equations are not positive definite");
  }
  const Vector u = llt.solve(d.rhs);
  out.u = ControlSignal{g, d.tau_index, {}};
  const int s_nodes = g.M - d.tau_index + 1;
  out.u.u.resize(static_cast<std::size_t>(s_nodes));
  for (int k = 0; k < s_nodes; ++k) {
    out.u.u[k] = u.segment(static_cast<Eigen::Index>(k) * p.m, p.m);
  }
  out.cost = discrete_cost(p, d, u);
  return out;
}

GradientReport gradient_check(const LQProblem& p, const Resolvent& r, const Grid& g,
                              const StatePair& state, const ControlSignal& u,
                              int directions, std::uint64_t seed) {
  const int a = checked_tau_index(g, state, p);
  if (u.start != a || static_cast<int>(u.u.size()) != g.M - a + 1) {
    throw InvalidProblem("gradient_check: control must cover [tau, T]");
  }
  const int s_nodes = g.M - a + 1;
  const auto w = trapezoid_weights(a, g.M, g.h);

  // Analytic gradient 2(u + B* p) under the weighted pairing.
  const Trajectory x = simulate(p, g, state, u);
  const AdjointTrajectory adj = solve_adjoint(p, r, x);
  std::vector<Vector> grad(static_cast<std::size_t>(s_nodes));
  GradientReport rep;
  for (int k = 0; k < s_nodes; ++k) {
    grad[k] = 2.0 * (u.u[k] + p.B.transpose() * adj.p[k]);
    rep.max_abs_gradient = std::max(rep.max_abs_gradient, grad[k].cwiseAbs().maxCoeff());
  }

  double u_sup = 0.0;
  for (const auto& uk : u.u) u_sup = std::max(u_sup, uk.cwiseAbs().maxCoeff());
  const double eps = 1e-5 * std::max(1.0, u_sup);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int dir = 0; dir < directions; ++dir) {
    std::vector<Vector> delta(static_cast<std::size_t>(s_nodes));
    double sup = 0.0;
    for (auto& dk : delta) {
      dk = Vector::NullaryExpr(p.m, [&](Eigen::Index) { return unif(rng); });
      sup = std::max(sup, dk.cwiseAbs().maxCoeff());
    }
    for (auto& dk : delta) dk /= sup;

    double predicted = 0.0;
    for (int k = 0; k < s_nodes; ++k) predicted += w[k] * grad[k].dot(delta[k]);

    ControlSignal up = u, um = u;
    for (int k = 0; k < s_nodes; ++k) {
      up.u[k] += eps * delta[k];
      um.u[k] -= eps * delta[k];
    }
    const double jp = cost(p, simulate(p, g, state, up), up);
    const double jm = cost(p, simulate(p, g, state, um), um);
    const double fd = (jp - jm) / (2.0 * eps);
    const double dev = std::abs(predicted - fd) / std::max(1.0, std::abs(fd));
    rep.max_deviation = std::max(rep.max_deviation, dev);
  }
  return rep;
}

LoiReport verify_loi(const LQProblem& p, const Resolvent& r, const Grid& g,
                     const StatePair& state, const ControlSignal& u1, double tau1) {
  const int a = checked_tau_index(g, state, p);
  const int a1 = g.index_of(tau1);
  if (a1 < a) throw InvalidProblem("verify_loi: tau1 must not precede tau");

  LoiReport rep;
  rep.lhs = value_function(p, r, g, state);

  const Trajectory x1 = simulate(p, g, state, u1, a1);
  const double running = trapezoid_sum(a, a1, g.h, [&](int k) -> double {
    const Vector& xv = x1.x[k - a];
    const Vector& uv = u1.u[k - u1.start];
    return xv.dot(p.Q * xv) + uv.squaredNorm();
  });
  const StatePair next = evolve(p, g, state, u1, g.node(a1));
  rep.rhs = running + value_function(p, r, g, next);
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

ComparisonReport compare_all(const LQProblem& p, const Grid& g, const Vector& x0,
                             const CompareOptions& opts) {
  const Resolvent r = compute_resolvent(p, g);
  const StatePair state = initial_state(x0);

  ComparisonReport rep;
  rep.T = g.T;
  rep.M = g.M;

  const ControlSignal u_ol = optimal_control_open_loop(p, r, g, state);
  const Trajectory x_ol = simulate(p, g, state, u_ol);
  rep.cost_open_loop = cost(p, x_ol, u_ol);
  rep.value_open_loop = rep.cost_open_loop;

  RiccatiOptions ropts;
  ropts.store_kernel_history = opts.with_residuals;
  const RiccatiSolution sol = solve_riccati(p, g, ropts);
  const ClosedLoopResult cl = closed_loop_simulate(p, sol, x0);
  rep.cost_riccati = cl.cost;
  rep.value_riccati = x0.dot(sol.P0(0) * x0);

  const DiscreteOptimum oracle = discrete_optimal_control(p, g, state);
  rep.cost_oracle = oracle.cost;
  rep.value_oracle = oracle.cost;

  auto sup_dist = [&](const ControlSignal& ua, const ControlSignal& ub) {
    double d = 0.0;
    for (int k = 0; k <= g.M; ++k) {
      d = std::max(d, (ua.u[k] - ub.u[k]).cwiseAbs().maxCoeff());
    }
    return d;
  };
  rep.dist_open_loop_riccati = sup_dist(u_ol, cl.u);
  rep.dist_open_loop_oracle = sup_dist(u_ol, oracle.u);
  rep.dist_riccati_oracle = sup_dist(cl.u, oracle.u);

  if (opts.with_residuals) rep.residuals = riccati_residual(p, sol);
  return rep;
}

}  // namespace vlqr
