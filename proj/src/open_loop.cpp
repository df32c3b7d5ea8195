#include "vlqr/open_loop.hpp"

#include <cmath>

namespace vlqr {

namespace {

std::vector<Matrix> kernel_lag_table(const LQProblem& p, const Grid& g) {
  std::vector<Matrix> table(static_cast<std::size_t>(g.M) + 1);
  for (int d = 0; d <= g.M; ++d) table[static_cast<std::size_t>(d)] = p.kernel_at(g.node(d));
  return table;
}

// Tail memory forcing v_q = int_0^tau N(t_q - s) x_tail(s) ds for
// q = a..M; identically zero when the tail is empty.
std::vector<Vector> tail_forcing(const LQProblem& p, const Grid& g,
                                 const std::vector<Matrix>& N, const StatePair& state,
                                 int a) {
  std::vector<Vector> v(static_cast<std::size_t>(g.M - a) + 1, Vector::Zero(p.n));
  if (a == 0) return v;
  const auto w = trapezoid_weights(0, a, g.h);
  for (int q = a; q <= g.M; ++q) {
    Vector& acc = v[q - a];
    for (int i = 0; i <= a; ++i) acc.noalias() += w[i] * (N[q - i] * state.x_tail[i]);
  }
  return v;
}

// Uncontrolled response F(t_k) = Z0(t_k - tau) x_hat + sum_q w_q Z0(t_k - t_q) v_q,
// the trapezoid form of the representation formula.
std::vector<Vector> uncontrolled_response(const Resolvent& r, const Vector& x_hat,
                                          const std::vector<Vector>& v, int a) {
  const Grid& g = r.grid;
  std::vector<Vector> F(static_cast<std::size_t>(g.M - a) + 1);
  for (int k = a; k <= g.M; ++k) {
    Vector acc = r.Z0[k - a] * x_hat;
    acc += trapezoid_sum(a, k, g.h,
                         [&](int q) -> Vector { return r.Z0[k - q] * v[q - a]; });
    F[k - a] = std::move(acc);
  }
  return F;
}

// Stacked right-hand side -B*[Z0*(T-t_i) Q0 F_M + int_{t_i}^T Z0*(s-t_i) Q F(s) ds].
Vector rhs_from_response(const LQProblem& p, const Resolvent& r, int a,
                         const std::vector<Vector>& F) {
  const Grid& g = r.grid;
  const int s_nodes = g.M - a + 1;
  std::vector<Vector> QF(static_cast<std::size_t>(s_nodes));
  for (int k = 0; k < s_nodes; ++k) QF[k] = p.Q * F[k];
  const Vector Q0F = p.Q0 * F[s_nodes - 1];

  Vector rhs(static_cast<Eigen::Index>(s_nodes) * p.m);
  for (int i = a; i <= g.M; ++i) {
    Vector acc = r.Z0[g.M - i].transpose() * Q0F;
    acc += trapezoid_sum(i, g.M, g.h, [&](int s) -> Vector {
      return r.Z0[s - i].transpose() * QF[s - a];
    });
    rhs.segment(static_cast<Eigen::Index>(i - a) * p.m, p.m) = -p.B.transpose() * acc;
  }
  return rhs;
}

ControlSignal unstack_control(const Grid& g, int a, int m, const Vector& u) {
  ControlSignal out{g, a, {}};
  out.u.resize(static_cast<std::size_t>(g.M - a) + 1);
  for (int k = 0; k <= g.M - a; ++k) {
    out.u[k] = u.segment(static_cast<Eigen::Index>(k) * m, m);
  }
  return out;
}

}  // namespace

AdjointTrajectory solve_adjoint(const LQProblem& p, const Resolvent& r,
                                const Trajectory& x) {
  const Grid& g = x.grid;
  const int a = x.start;
  if (a + static_cast<int>(x.x.size()) - 1 != g.M) {
    throw InvalidProblem("solve_adjoint: trajectory must reach the horizon");
  }
  std::vector<Vector> Qx(x.x.size());
  for (std::size_t k = 0; k < x.x.size(); ++k) Qx[k] = p.Q * x.x[k];
  const Vector Q0xT = p.Q0 * x.x.back();

  AdjointTrajectory adj{g, a, {}};
  adj.p.resize(x.x.size());
  // p(t) = int_t^T Z0*(s - t) Q x(s) ds + Z0*(T - t) Q0 x(T).
  for (int t = a; t <= g.M; ++t) {
    Vector acc = r.Z0[g.M - t].transpose() * Q0xT;
    acc += trapezoid_sum(t, g.M, g.h, [&](int s) -> Vector {
      return r.Z0[s - t].transpose() * Qx[s - a];
    });
    adj.p[t - a] = std::move(acc);
  }
  return adj;
}

FredholmSystem assemble_fredholm(const LQProblem& p, const Resolvent& r, int tau_index) {
  const Grid& g = r.grid;
  const int a = tau_index;
  if (a < 0 || a > g.M) throw InvalidProblem("assemble_fredholm: tau node out of range");
  const int n = p.n, m = p.m;
  const int s_nodes = g.M - a + 1;
  const int c = g.M - a;  // number of intervals on [tau, T]
  const double h = g.h;

  // Running-cost overlap table by displacement:
  //   S(d, c) = trap_{l=0..c} Z0(t_{l+d})* Q Z0(t_l),
  // extended over c by the endpoint recurrence. G(t_i, t_j) for i <= j
  // needs S(j - i, M - j), so entries with d + c <= M - a suffice.
  std::vector<Matrix> QZ(static_cast<std::size_t>(c) + 1);
  for (int l = 0; l <= c; ++l) QZ[l] = p.Q * r.Z0[l];

  std::vector<Eigen::Index> off(static_cast<std::size_t>(c) + 2, 0);
  for (int d = 0; d <= c; ++d) off[d + 1] = off[d] + (c - d + 1);
  Matrix S(n, off[c + 1] * n);
  auto S_at = [&](int d, int cc) { return S.middleCols((off[d] + cc) * n, n); };
  Matrix term_prev(n, n), term(n, n);
  for (int d = 0; d <= c; ++d) {
    S_at(d, 0).setZero();
    term_prev.noalias() = r.Z0[d].transpose() * QZ[0];
    for (int cc = 1; cc <= c - d; ++cc) {
      term.noalias() = r.Z0[cc + d].transpose() * QZ[cc];
      S_at(d, cc) = S_at(d, cc - 1) + 0.5 * h * (term_prev + term);
      term_prev.swap(term);
    }
  }

  // Terminal overlap Z0(T-t_i)* Q0 Z0(T-t_j) via E[c] = Q0 Z0(t_c).
  std::vector<Matrix> E(static_cast<std::size_t>(c) + 1);
  for (int l = 0; l <= c; ++l) E[l] = p.Q0 * r.Z0[l];

  const auto w = trapezoid_weights(a, g.M, h);

  FredholmSystem sys;
  sys.grid = g;
  sys.tau_index = a;
  sys.n = n;
  sys.m = m;
  const Eigen::Index dim = static_cast<Eigen::Index>(s_nodes) * m;
  sys.op = Matrix::Identity(dim, dim);
  sys.weighted_sym = Matrix::Identity(dim, dim);

  Matrix inner(n, n), Gij(m, m);
  for (int i = a; i <= g.M; ++i) {
    for (int j = i; j <= g.M; ++j) {
      inner.noalias() = r.Z0[g.M - i].transpose() * E[g.M - j];
      inner += S_at(j - i, g.M - j);
      Gij.noalias() = p.B.transpose() * (inner * p.B).eval();
      const Eigen::Index I = static_cast<Eigen::Index>(i - a) * m;
      const Eigen::Index J = static_cast<Eigen::Index>(j - a) * m;
      sys.op.block(I, J, m, m) += Gij * w[j - a];
      const double sw = std::sqrt(w[i - a] * w[j - a]);
      sys.weighted_sym.block(I, J, m, m) += sw * Gij;
      if (j > i) {
        sys.op.block(J, I, m, m) += Gij.transpose() * w[i - a];
        sys.weighted_sym.block(J, I, m, m) += sw * Gij.transpose();
      }
    }
  }
  sys.lu.compute(sys.op);
  return sys;
}

Vector fredholm_rhs(const FredholmSystem& sys, const LQProblem& p,
                    const Resolvent& r, const StatePair& state) {
  const Grid& g = sys.grid;
  const int a = sys.tau_index;
  if (g.index_of(state.tau) != a) {
    throw InvalidProblem("fredholm_rhs: state tau does not match the assembled system");
  }
  const auto N = kernel_lag_table(p, g);
  const auto v = tail_forcing(p, g, N, state, a);
  const auto F = uncontrolled_response(r, state.x_hat, v, a);
  return rhs_from_response(p, r, a, F);
}

ControlSignal solve_open_loop(const FredholmSystem& sys, const LQProblem& p,
                              const Resolvent& r, const StatePair& state) {
  const Vector rhs = fredholm_rhs(sys, p, r, state);
  return unstack_control(sys.grid, sys.tau_index, sys.m, sys.lu.solve(rhs));
}

ControlSignal optimal_control_open_loop(const LQProblem& p, const Resolvent& r,
                                        const Grid& g, const StatePair& state) {
  const FredholmSystem sys = assemble_fredholm(p, r, g.index_of(state.tau));
  return solve_open_loop(sys, p, r, state);
}

double value_function(const LQProblem& p, const Resolvent& r, const Grid& g,
                      const StatePair& state) {
  const ControlSignal u = optimal_control_open_loop(p, r, g, state);
  const Trajectory x = simulate(p, g, state, u);
  return cost(p, x, u);
}

InfluenceMatrices influence_matrices(const LQProblem& p, const Resolvent& r,
                                     const Grid& g, int tau_index) {
  const int a = tau_index;
  const int n = p.n, m = p.m;
  const int s_nodes = g.M - a + 1;
  const FredholmSystem sys = assemble_fredholm(p, r, a);
  const auto N = kernel_lag_table(p, g);

  // Basis responses: head columns e_c, then per tail node i the columns of
  // the per-unit-integral map (the quadrature weight cancels analytically,
  // so the forcing is just N(t_q - t_i) e_c).
  const int tail_nodes = a == 0 ? 0 : a + 1;
  const int n_cols = n + tail_nodes * n;
  Matrix rhs_all(static_cast<Eigen::Index>(s_nodes) * m, n_cols);
  std::vector<std::vector<Vector>> responses(static_cast<std::size_t>(n_cols));

  for (int c = 0; c < n; ++c) {
    std::vector<Vector> F(static_cast<std::size_t>(s_nodes));
    for (int k = 0; k < s_nodes; ++k) F[k] = r.Z0[k].col(c);
    rhs_all.col(c) = rhs_from_response(p, r, a, F);
    responses[c] = std::move(F);
  }
  std::vector<Vector> v(static_cast<std::size_t>(s_nodes));
  for (int i = 0; i < tail_nodes; ++i) {
    for (int c = 0; c < n; ++c) {
      for (int q = a; q <= g.M; ++q) v[q - a] = N[q - i].col(c);
      auto F = uncontrolled_response(r, Vector::Zero(n), v, a);
      const int col = n + i * n + c;
      rhs_all.col(col) = rhs_from_response(p, r, a, F);
      responses[col] = std::move(F);
    }
  }

  const Matrix u_all = sys.lu.solve(rhs_all);

  InfluenceMatrices inf;
  inf.grid = g;
  inf.tau_index = a;
  inf.Phi1.assign(static_cast<std::size_t>(s_nodes), Matrix(m, n));
  inf.Z1.assign(static_cast<std::size_t>(s_nodes), Matrix(n, n));
  if (tail_nodes > 0) {
    inf.Phi2.assign(static_cast<std::size_t>(s_nodes),
                    std::vector<Matrix>(static_cast<std::size_t>(tail_nodes), Matrix(m, n)));
    inf.Z2.assign(static_cast<std::size_t>(s_nodes),
                  std::vector<Matrix>(static_cast<std::size_t>(tail_nodes), Matrix(n, n)));
  }

  // Closed-loop state columns x(t_k) = F(t_k) + int_tau^{t_k} Z0(t_k - q) B u(q) dq.
  std::vector<Vector> Bu(static_cast<std::size_t>(s_nodes));
  for (int col = 0; col < n_cols; ++col) {
    for (int k = 0; k < s_nodes; ++k) {
      Bu[k] = p.B * u_all.col(col).segment(static_cast<Eigen::Index>(k) * m, m);
    }
    const int i = col < n ? -1 : (col - n) / n;
    const int c = col < n ? col : (col - n) % n;
    for (int k = 0; k < s_nodes; ++k) {
      Vector x = responses[col][k];
      x += trapezoid_sum(a, a + k, g.h, [&](int q) -> Vector {
        return r.Z0[a + k - q] * Bu[q - a];
      });
      const auto useg = u_all.col(col).segment(static_cast<Eigen::Index>(k) * m, m);
      if (i < 0) {
        inf.Phi1[k].col(c) = useg;
        inf.Z1[k].col(c) = x;
      } else {
        inf.Phi2[k][i].col(c) = useg;
        inf.Z2[k][i].col(c) = x;
      }
    }
  }
  return inf;
}

QuadraticFormAtTau assemble_quadratic_form(const LQProblem& p, const Resolvent& r,
                                           const Grid& g, int tau_index) {
  const InfluenceMatrices inf = influence_matrices(p, r, g, tau_index);
  const int a = tau_index;
  const int s_nodes = g.M - a + 1;
  const int n = p.n;
  const int tail_nodes = a == 0 ? 0 : a + 1;
  const auto w = trapezoid_weights(a, g.M, g.h);

  QuadraticFormAtTau form;
  form.grid = g;
  form.tau_index = a;

  // P0 = int_tau^T [Z1* Q Z1 + Phi1* Phi1] ds + Z1*(T) Q0 Z1(T).
  form.P0 = Matrix::Zero(n, n);
  for (int k = 0; k < s_nodes; ++k) {
    form.P0.noalias() += w[k] * (inf.Z1[k].transpose() * (p.Q * inf.Z1[k]).eval());
    form.P0.noalias() += w[k] * (inf.Phi1[k].transpose() * inf.Phi1[k]);
  }
  form.P0.noalias() += inf.Z1[s_nodes - 1].transpose() * (p.Q0 * inf.Z1[s_nodes - 1]).eval();

  if (tail_nodes == 0) return form;

  form.P1.assign(static_cast<std::size_t>(tail_nodes), Matrix::Zero(n, n));
  form.K.resize(static_cast<std::size_t>(tail_nodes));
  for (int i = 0; i < tail_nodes; ++i) {
    form.K[i].assign(static_cast<std::size_t>(i) + 1, Matrix::Zero(n, n));
  }

  std::vector<Matrix> QZ2(static_cast<std::size_t>(tail_nodes));
  for (int k = 0; k < s_nodes; ++k) {
    const Matrix QZ1 = p.Q * inf.Z1[k];
    for (int l = 0; l < tail_nodes; ++l) QZ2[l] = p.Q * inf.Z2[k][l];
    for (int i = 0; i < tail_nodes; ++i) {
      form.P1[i].noalias() += w[k] * (inf.Z1[k].transpose() * QZ2[i]);
      form.P1[i].noalias() += w[k] * (inf.Phi1[k].transpose() * inf.Phi2[k][i]);
      for (int l = 0; l <= i; ++l) {
        form.K[i][l].noalias() += w[k] * (inf.Z2[k][i].transpose() * QZ2[l]);
        form.K[i][l].noalias() += w[k] * (inf.Phi2[k][i].transpose() * inf.Phi2[k][l]);
      }
    }
  }
  const auto& Z2T = inf.Z2[s_nodes - 1];
  const Matrix& Z1T = inf.Z1[s_nodes - 1];
  for (int i = 0; i < tail_nodes; ++i) {
    const Matrix Q0Z2i = p.Q0 * Z2T[i];
    form.P1[i].noalias() += Z1T.transpose() * Q0Z2i;
    for (int l = 0; l <= i; ++l) {
      form.K[i][l].noalias() += Z2T[i].transpose() * (p.Q0 * Z2T[l]).eval();
    }
  }
  return form;
}

double eval_quadratic_form(const QuadraticFormAtTau& form, const StatePair& state) {
  const Grid& g = form.grid;
  if (g.index_of(state.tau) != form.tau_index) {
    throw InvalidProblem("eval_quadratic_form: state tau does not match the form");
  }
  const int a = form.tau_index;
  double val = state.x_hat.dot(form.P0 * state.x_hat);
  if (a == 0) return val;
  const auto w = trapezoid_weights(0, a, g.h);
  for (int i = 0; i <= a; ++i) {
    val += 2.0 * w[i] * state.x_hat.dot(form.P1[i] * state.x_tail[i]);
    for (int l = 0; l <= a; ++l) {
      const double wij = w[i] * w[l];
      if (l <= i) {
        val += wij * state.x_tail[i].dot(form.K[i][l] * state.x_tail[l]);
      } else {
        val += wij * state.x_tail[l].dot(form.K[l][i] * state.x_tail[i]);
      }
    }
  }
  return val;
}

}  // namespace vlqr
