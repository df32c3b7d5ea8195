#include "vlqr/riccati.hpp"

#include <cmath>
#include <cstring>

namespace vlqr {

namespace {

// Column-major n x n block kernels on raw storage. The triangular system
// touches O(M^3/6) blocks per solve, so these stay allocation-free.

inline void blk_zero(double* c, int nn) { std::memset(c, 0, sizeof(double) * nn); }

// c += s * a * b
inline void mul_acc(double* c, const double* a, const double* b, int n, double s) {
  for (int j = 0; j < n; ++j) {
    double* cj = c + j * n;
    const double* bj = b + j * n;
    for (int k = 0; k < n; ++k) {
      const double f = s * bj[k];
      const double* ak = a + k * n;
      for (int i = 0; i < n; ++i) cj[i] += f * ak[i];
    }
  }
}

// c += s * a^T * b
inline void mul_t_acc(double* c, const double* a, const double* b, int n, double s) {
  for (int j = 0; j < n; ++j) {
    double* cj = c + j * n;
    const double* bj = b + j * n;
    for (int i = 0; i < n; ++i) {
      const double* ai = a + i * n;
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += ai[k] * bj[k];
      cj[i] += s * acc;
    }
  }
}

// c += s * a
inline void add_scaled(double* c, const double* a, int nn, double s) {
  for (int t = 0; t < nn; ++t) c[t] += s * a[t];
}

// c += s * a^T
inline void add_scaled_t(double* c, const double* a, int n, double s) {
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) c[j * n + i] += s * a[i * n + j];
}

inline std::size_t tri(int i) { return static_cast<std::size_t>(i) * (i + 1) / 2; }

struct RiccatiTables {
  int n = 0;
  int nn = 0;
  std::vector<double> BBt;
  std::vector<double> Q;
  std::vector<double> N;  // lag table, block d at N.data() + d*nn
  std::vector<double> C;  // per-level scratch C[i] = BBt*P1[i] - N[L-i]
  std::vector<double> tmp;

  RiccatiTables(const LQProblem& p, const Grid& g) {
    n = p.n;
    nn = n * n;
    BBt.assign(nn, 0.0);
    Q.assign(nn, 0.0);
    const Matrix bbt = p.B * p.B.transpose();
    Eigen::Map<Matrix>(BBt.data(), n, n) = bbt;
    Eigen::Map<Matrix>(Q.data(), n, n) = p.Q;
    N.assign(static_cast<std::size_t>(g.M + 1) * nn, 0.0);
    for (int d = 0; d <= g.M; ++d) {
      Eigen::Map<Matrix>(N.data() + static_cast<std::size_t>(d) * nn, n, n) =
          p.kernel_at(g.node(d));
    }
    C.assign(static_cast<std::size_t>(g.M + 1) * nn, 0.0);
    tmp.assign(nn, 0.0);
  }
};

// Right-hand sides of the three lines at tau level L, for P1 rows and K
// pairs up to R <= L:
//   dP0      = P0 BB* P0 - Q - P1(tau,tau) - P1*(tau,tau)
//   dP1[i]   = P0 (BB* P1[i] - N(tau - t_i)) - K(tau, t_i, tau)
//   dK[i][l] = P1[l]^T (BB* P1[i] - N(tau - t_i)) - N(tau - t_l)^T P1[i]
// K(tau, t_i, tau) is the transpose of the stored block (L, i).
void riccati_rhs(RiccatiTables& w, int L, int R, const double* P0, const double* P1,
                 const double* K, double* dP0, double* dP1, double* dK) {
  const int n = w.n, nn = w.nn;

  blk_zero(w.tmp.data(), nn);
  mul_acc(w.tmp.data(), w.BBt.data(), P0, n, 1.0);
  blk_zero(dP0, nn);
  mul_acc(dP0, P0, w.tmp.data(), n, 1.0);
  add_scaled(dP0, w.Q.data(), nn, -1.0);
  const double* diag = P1 + static_cast<std::size_t>(L) * nn;
  add_scaled(dP0, diag, nn, -1.0);
  add_scaled_t(dP0, diag, n, -1.0);

  for (int i = 0; i <= R; ++i) {
    double* Ci = w.C.data() + static_cast<std::size_t>(i) * nn;
    blk_zero(Ci, nn);
    mul_acc(Ci, w.BBt.data(), P1 + static_cast<std::size_t>(i) * nn, n, 1.0);
    add_scaled(Ci, w.N.data() + static_cast<std::size_t>(L - i) * nn, nn, -1.0);
  }

  for (int i = 0; i <= R; ++i) {
    double* d = dP1 + static_cast<std::size_t>(i) * nn;
    blk_zero(d, nn);
    mul_acc(d, P0, w.C.data() + static_cast<std::size_t>(i) * nn, n, 1.0);
    add_scaled_t(d, K + (tri(L) + i) * nn, n, -1.0);
  }

  for (int i = 0; i <= R; ++i) {
    const double* Ci = w.C.data() + static_cast<std::size_t>(i) * nn;
    const double* P1i = P1 + static_cast<std::size_t>(i) * nn;
    for (int l = 0; l <= i; ++l) {
      double* d = dK + (tri(i) + l) * nn;
      blk_zero(d, nn);
      mul_t_acc(d, P1 + static_cast<std::size_t>(l) * nn, Ci, n, 1.0);
      mul_t_acc(d, w.N.data() + static_cast<std::size_t>(L - l) * nn, P1i, n, -1.0);
    }
  }
}

void symmetrize(double* a, int n) {
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) {
      const double v = 0.5 * (a[j * n + i] + a[i * n + j]);
      a[j * n + i] = v;
      a[i * n + j] = v;
    }
}

bool block_finite(const double* a, int nn) {
  for (int t = 0; t < nn; ++t) {
    if (!std::isfinite(a[t])) return false;
  }
  return true;
}

}  // namespace

RiccatiSolution::RiccatiSolution(Grid grid, int n, bool kernel_history)
    : grid_(grid), n_(n), has_kernel_(kernel_history) {
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const std::size_t M = static_cast<std::size_t>(grid.M);
  p0_.assign((M + 1) * nn, 0.0);
  p1_.assign((M + 1) * (M + 2) / 2 * nn, 0.0);
  if (has_kernel_) {
    k_off_.assign(M + 2, 0);
    for (std::size_t j = 0; j <= M; ++j) {
      k_off_[j + 1] = k_off_[j] + (j + 1) * (j + 2) / 2;
    }
    k_.assign(k_off_[M + 1] * nn, 0.0);
  }
}

double* RiccatiSolution::p0_data(int j) {
  return p0_.data() + static_cast<std::size_t>(j) * n_ * n_;
}
double* RiccatiSolution::p1_data(int j) {
  return p1_.data() + tri(j) * static_cast<std::size_t>(n_) * n_;
}
double* RiccatiSolution::k_data(int j) {
  if (!has_kernel_) throw NumericalError("riccati: kernel history was not stored");
  return k_.data() + k_off_[static_cast<std::size_t>(j)] * n_ * n_;
}
const double* RiccatiSolution::p0_data(int j) const {
  return const_cast<RiccatiSolution*>(this)->p0_data(j);
}
const double* RiccatiSolution::p1_data(int j) const {
  return const_cast<RiccatiSolution*>(this)->p1_data(j);
}
const double* RiccatiSolution::k_data(int j) const {
  return const_cast<RiccatiSolution*>(this)->k_data(j);
}

Eigen::Map<const Matrix> RiccatiSolution::P0(int j) const {
  return {p0_data(j), n_, n_};
}
Eigen::Map<Matrix> RiccatiSolution::P0_mut(int j) { return {p0_data(j), n_, n_}; }
Eigen::Map<const Matrix> RiccatiSolution::P1(int j, int i) const {
  return {p1_data(j) + static_cast<std::size_t>(i) * n_ * n_, n_, n_};
}

Matrix RiccatiSolution::K(int j, int i, int l) const {
  const std::size_t nn = static_cast<std::size_t>(n_) * n_;
  if (l <= i) {
    return Eigen::Map<const Matrix>(k_data(j) + (tri(i) + l) * nn, n_, n_);
  }
  return Eigen::Map<const Matrix>(k_data(j) + (tri(l) + i) * nn, n_, n_).transpose();
}

RiccatiSolution solve_riccati(const LQProblem& p, const Grid& g,
                              const RiccatiOptions& opts) {
  const int M = g.M, n = p.n;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const double h = g.h;

  RiccatiTables w(p, g);
  RiccatiSolution sol(g, n, opts.store_kernel_history);

  const std::size_t p1_cap = static_cast<std::size_t>(M + 1) * nn;
  const std::size_t k_cap = (static_cast<std::size_t>(M) + 1) * (M + 2) / 2 * nn;
  std::vector<double> P0(nn), P1(p1_cap, 0.0), K(k_cap, 0.0);
  std::vector<double> dP0a(nn), dP1a(p1_cap), dKa(k_cap);
  std::vector<double> dP0b(nn), dP1b(p1_cap), dKb(k_cap);
  std::vector<double> pP0(nn), pP1(p1_cap), pK(k_cap);

  Eigen::Map<Matrix>(P0.data(), n, n) = p.Q0;

  auto archive = [&](int j) {
    std::memcpy(sol.p0_data(j), P0.data(), sizeof(double) * nn);
    std::memcpy(sol.p1_data(j), P1.data(), sizeof(double) * (tri(j + 1) - tri(j)) * nn);
    const std::size_t blocks = tri(j + 1);
    double sup = sol.kernel_sup();
    for (std::size_t t = 0; t < blocks * nn; ++t) {
      const double v = std::fabs(K[t]);
      if (v > sup) sup = v;
    }
    sol.kernel_sup() = sup;
    if (opts.store_kernel_history) {
      std::memcpy(sol.k_data(j), K.data(), sizeof(double) * blocks * nn);
    }
  };

  archive(M);

  for (int j = M; j >= 1; --j) {
    const int R = j - 1;
    riccati_rhs(w, j, R, P0.data(), P1.data(), K.data(), dP0a.data(), dP1a.data(),
                dKa.data());

    // Predictor at tau_{j-1}; the flat block indexing is level-independent,
    // so the prefix of each array is the lower-level slice.
    const std::size_t rows = static_cast<std::size_t>(R + 1) * nn;
    const std::size_t pairs = tri(R + 1) * nn;
    for (std::size_t t = 0; t < nn; ++t) pP0[t] = P0[t] - h * dP0a[t];
    for (std::size_t t = 0; t < rows; ++t) pP1[t] = P1[t] - h * dP1a[t];
    for (std::size_t t = 0; t < pairs; ++t) pK[t] = K[t] - h * dKa[t];

    riccati_rhs(w, R, R, pP0.data(), pP1.data(), pK.data(), dP0b.data(), dP1b.data(),
                dKb.data());

    for (std::size_t t = 0; t < nn; ++t) P0[t] -= 0.5 * h * (dP0a[t] + dP0b[t]);
    for (std::size_t t = 0; t < rows; ++t) P1[t] -= 0.5 * h * (dP1a[t] + dP1b[t]);
    for (std::size_t t = 0; t < pairs; ++t) K[t] -= 0.5 * h * (dKa[t] + dKb[t]);
    symmetrize(P0.data(), n);

    if (!block_finite(P0.data(), static_cast<int>(nn))) {
      throw NumericalError("riccati solution is non-finite at tau = " +
                           std::to_string(g.node(j - 1)) + " (finite escape)");
    }
    archive(j - 1);
  }
  return sol;
}

Vector feedback_control(const LQProblem& p, const RiccatiSolution& sol,
                        const StatePair& state) {
  const Grid& g = sol.grid();
  const int j = g.index_of(state.tau);
  if (state.x_hat.size() != p.n) throw InvalidProblem("feedback_control: bad head dimension");
  Vector acc = sol.P0(j) * state.x_hat;
  if (j > 0) {
    if (static_cast<int>(state.x_tail.size()) != j + 1) {
      throw InvalidProblem("feedback_control: tail does not match tau");
    }
    for (int i = 0; i <= j; ++i) {
      const double w = (i == 0 || i == j) ? 0.5 * g.h : g.h;
      acc.noalias() += w * (sol.P1(j, i) * state.x_tail[i]);
    }
  }
  return -p.B.transpose() * acc;
}

ClosedLoopResult closed_loop_simulate(const LQProblem& p, const RiccatiSolution& sol,
                                      const Vector& x0) {
  const Grid& g = sol.grid();
  const int M = g.M, n = p.n;
  const double h = g.h;
  if (x0.size() != n) throw InvalidProblem("closed_loop_simulate: bad x0 dimension");

  std::vector<Matrix> N(static_cast<std::size_t>(M) + 1);
  for (int d = 0; d <= M; ++d) N[d] = p.kernel_at(g.node(d));

  std::vector<Vector> xs(static_cast<std::size_t>(M) + 1);
  std::vector<Vector> us(static_cast<std::size_t>(M) + 1);
  xs[0] = x0;

  // Feedback at node k from the samples xs[0..k].
  auto feedback_at = [&](int k) -> Vector {
    Vector acc = sol.P0(k) * xs[k];
    for (int i = 0; i <= k && k > 0; ++i) {
      const double w = (i == 0 || i == k) ? 0.5 * h : h;
      acc.noalias() += w * (sol.P1(k, i) * xs[i]);
    }
    return -p.B.transpose() * acc;
  };
  auto memory_at = [&](int k) -> Vector {
    Vector acc = Vector::Zero(n);
    if (k == 0) return acc;
    acc.noalias() += 0.5 * (N[k] * xs[0]);
    for (int i = 1; i < k; ++i) acc.noalias() += N[k - i] * xs[i];
    acc.noalias() += 0.5 * (N[0] * xs[k]);
    return (h * acc).eval();
  };

  us[0] = feedback_at(0);
  for (int k = 0; k < M; ++k) {
    const Vector d1 = memory_at(k) + p.B * us[k];
    xs[k + 1] = xs[k] + h * d1;  // predictor
    const Vector up = feedback_at(k + 1);
    const Vector d2 = memory_at(k + 1) + p.B * up;
    xs[k + 1] = xs[k] + 0.5 * h * (d1 + d2);
    if (!xs[k + 1].allFinite()) {
      throw NumericalError("closed-loop state is non-finite at t = " +
                           std::to_string(g.node(k + 1)));
    }
    us[k + 1] = feedback_at(k + 1);
  }

  ClosedLoopResult out;
  out.x = Trajectory{g, 0, std::move(xs)};
  out.u = ControlSignal{g, 0, std::move(us)};
  out.cost = cost(p, out.x, out.u);
  return out;
}

RiccatiResidual riccati_residual(const LQProblem& p, const RiccatiSolution& sol) {
  if (!sol.has_kernel_history()) {
    throw NumericalError("riccati_residual requires the stored kernel history");
  }
  const Grid& g = sol.grid();
  const int M = g.M, n = sol.n();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const double inv2h = 1.0 / (2.0 * g.h);

  RiccatiTables w(p, g);
  std::vector<double> dP0(nn), dP1(static_cast<std::size_t>(M + 1) * nn),
      dK((static_cast<std::size_t>(M) + 1) * (M + 2) / 2 * nn);

  RiccatiResidual res;
  for (int j = 1; j < M; ++j) {
    const int R = j - 1;
    riccati_rhs(w, j, R, sol.p0_data(j), sol.p1_data(j), sol.k_data(j), dP0.data(),
                dP1.data(), dK.data());

    const double* hi0 = sol.p0_data(j + 1);
    const double* lo0 = sol.p0_data(j - 1);
    for (std::size_t t = 0; t < nn; ++t) {
      const double r = (hi0[t] - lo0[t]) * inv2h - dP0[t];
      res.p0 = std::max(res.p0, std::fabs(r));
    }
    const double* hi1 = sol.p1_data(j + 1);
    const double* lo1 = sol.p1_data(j - 1);
    for (std::size_t t = 0; t < static_cast<std::size_t>(R + 1) * nn; ++t) {
      const double r = (hi1[t] - lo1[t]) * inv2h - dP1[t];
      res.p1 = std::max(res.p1, std::fabs(r));
    }
    const double* hik = sol.k_data(j + 1);
    const double* lok = sol.k_data(j - 1);
    for (std::size_t t = 0; t < tri(R + 1) * nn; ++t) {
      const double r = (hik[t] - lok[t]) * inv2h - dK[t];
      res.k = std::max(res.k, std::fabs(r));
    }
  }
  return res;
}

}  // namespace vlqr
