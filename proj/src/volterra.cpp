#include "vlqr/volterra.hpp"

#include <cmath>

namespace vlqr {

namespace {

// Kernel values at node lags: table[d] = N(d*h).
std::vector<Matrix> kernel_lag_table(const LQProblem& p, const Grid& g) {
  std::vector<Matrix> table(static_cast<std::size_t>(g.M) + 1);
  for (int d = 0; d <= g.M; ++d) table[static_cast<std::size_t>(d)] = p.kernel_at(g.node(d));
  return table;
}

void check_state_shape(const LQProblem& p, const Grid& g, const StatePair& s, int& a) {
  a = g.index_of(s.tau);
  if (s.x_hat.size() != p.n) {
    throw InvalidProblem("state head has dimension " + std::to_string(s.x_hat.size()) +
                         ", expected " + std::to_string(p.n));
  }
  const std::size_t want = a == 0 ? 0 : static_cast<std::size_t>(a) + 1;
  if (s.x_tail.size() != want) {
    throw InvalidProblem("state tail holds " + std::to_string(s.x_tail.size()) +
                         " samples, expected " + std::to_string(want));
  }
  for (const auto& v : s.x_tail) {
    if (v.size() != p.n) throw InvalidProblem("state tail sample has wrong dimension");
  }
}

}  // namespace

Resolvent compute_resolvent(const LQProblem& p, const Grid& g) {
  const int M = g.M;
  const double h = g.h;
  const auto N = kernel_lag_table(p, g);

  Resolvent r{g, {}};
  r.Z0.resize(static_cast<std::size_t>(M) + 1);
  r.Z0[0] = Matrix::Identity(p.n, p.n);

  // Z0'(t) = int_0^t Z0(xi) N(t - xi) dxi, advanced by the explicit
  // trapezoid scheme with trapezoid memory sums.
  auto deriv = [&](int j) {
    return trapezoid_sum(0, j, h, [&](int l) -> Matrix { return r.Z0[l] * N[j - l]; });
  };

  for (int j = 0; j < M; ++j) {
    const Matrix d1 = deriv(j);
    r.Z0[j + 1] = r.Z0[j] + h * d1;  // predictor, overwritten below
    const Matrix d2 = deriv(j + 1);
    r.Z0[j + 1] = r.Z0[j] + 0.5 * h * (d1 + d2);
    if (!r.Z0[j + 1].allFinite()) {
      throw NumericalError("resolvent is non-finite at t = " + std::to_string(g.node(j + 1)));
    }
  }
  return r;
}

Matrix history_kernel(const LQProblem& p, const Resolvent& r, int j, int i, int a) {
  const Grid& g = r.grid;
  if (i < 0 || i > a || a > j || j > g.M) {
    throw InvalidProblem("history_kernel: need 0 <= i <= a <= j <= M");
  }
  // Y(t_j, t_i; t_a) = int_{t_a}^{t_j} Z0(t_j - xi) N(xi - t_i) dxi.
  return trapezoid_sum(a, j, g.h, [&](int k) -> Matrix {
    return r.Z0[j - k] * p.kernel_at(g.node(k - i));
  });
}

ControlSignal zero_control(const Grid& g, int start, int m) {
  ControlSignal u{g, start, {}};
  u.u.assign(static_cast<std::size_t>(g.M - start) + 1, Vector::Zero(m));
  return u;
}

Trajectory simulate(const LQProblem& p, const Grid& g, const StatePair& state,
                    const ControlSignal& u, int end) {
  if (end < 0) end = g.M;
  int a = 0;
  check_state_shape(p, g, state, a);
  if (end < a || end > g.M) throw InvalidProblem("simulate: end node out of range");
  if (u.start > a || u.start + static_cast<int>(u.u.size()) - 1 < end) {
    throw InvalidProblem("simulate: control does not cover [tau, t_end]");
  }
  for (const auto& v : u.u) {
    if (v.size() != p.m) throw InvalidProblem("control sample has wrong dimension");
  }

  const double h = g.h;
  const auto N = kernel_lag_table(p, g);

  // Full node history; tail below the junction, head at the junction.
  std::vector<Vector> xs(static_cast<std::size_t>(end) + 1);
  for (int i = 0; i < a; ++i) xs[i] = state.x_tail[i];
  xs[a] = state.x_hat;

  auto u_at = [&](int k) -> const Vector& { return u.u[k - u.start]; };

  // Memory term: trapezoid over the history [0, tau] (tail value at the
  // junction) plus trapezoid over the active span [tau, t_k] (head at the
  // junction). The two pieces coincide with the single [0, t_k] rule for
  // junction-compatible states; a zero tail contributes exactly nothing,
  // which keeps the convolution dynamics translation invariant.
  Vector mem(p.n), d1(p.n), d2(p.n);
  auto memory = [&](int k, Vector& out) {
    out.setZero();
    if (a > 0) {
      out.noalias() += 0.5 * (N[k] * xs[0]);
      for (int i = 1; i < a; ++i) out.noalias() += N[k - i] * xs[i];
      out.noalias() += 0.5 * (N[k - a] * state.x_tail[a]);
    }
    if (k > a) {
      out.noalias() += 0.5 * (N[k - a] * xs[a]);
      for (int i = a + 1; i < k; ++i) out.noalias() += N[k - i] * xs[i];
      out.noalias() += 0.5 * (N[0] * xs[k]);
    }
    out *= h;
  };

  for (int k = a; k < end; ++k) {
    memory(k, mem);
    d1 = mem + p.B * u_at(k);
    xs[k + 1] = xs[k] + h * d1;  // predictor
    memory(k + 1, mem);
    d2 = mem + p.B * u_at(k + 1);
    xs[k + 1] = xs[k] + 0.5 * h * (d1 + d2);
    if (!xs[k + 1].allFinite()) {
      throw NumericalError("state is non-finite at t = " + std::to_string(g.node(k + 1)));
    }
  }

  Trajectory tr{g, a, {}};
  tr.x.assign(xs.begin() + a, xs.end());
  return tr;
}

StatePair evolve(const LQProblem& p, const Grid& g, const StatePair& state,
                 const ControlSignal& u, double tau1) {
  const int a1 = g.index_of(tau1);
  const int a = g.index_of(state.tau);
  if (a1 < a) throw InvalidProblem("evolve: tau1 must not precede tau");
  if (a1 == a) return state;

  const Trajectory tr = simulate(p, g, state, u, a1);

  StatePair out;
  out.tau = g.node(a1);
  out.x_hat = tr.x.back();
  out.x_tail.reserve(static_cast<std::size_t>(a1) + 1);
  // History on [0, tau] is preserved bit-identically; for a junction-
  // compatible state the node-a sample equals the old head.
  for (int i = 0; i < a; ++i) out.x_tail.push_back(state.x_tail[i]);
  out.x_tail.push_back(a == 0 ? state.x_hat : state.x_tail[a]);
  for (int k = a + 1; k <= a1; ++k) out.x_tail.push_back(tr.x[k - a]);
  return out;
}

double cost(const LQProblem& p, const Trajectory& x, const ControlSignal& u) {
  const Grid& g = x.grid;
  const int a = x.start;
  if (a + static_cast<int>(x.x.size()) - 1 != g.M) {
    throw InvalidProblem("cost: trajectory must reach the horizon");
  }
  if (u.start > a || u.start + static_cast<int>(u.u.size()) - 1 < g.M) {
    throw InvalidProblem("cost: control does not cover the trajectory span");
  }
  auto integrand = [&](int k) -> double {
    const Vector& xv = x.x[k - a];
    const Vector& uv = u.u[k - u.start];
    return xv.dot(p.Q * xv) + uv.squaredNorm();
  };
  const double running = trapezoid_sum(a, g.M, g.h, integrand);
  const Vector& xT = x.x.back();
  return running + xT.dot(p.Q0 * xT);
}

}  // namespace vlqr
