#pragma once

#include <cmath>
#include <random>

#include "vlqr/verification.hpp"

namespace testsupport {

using namespace vlqr;

inline Matrix mat1(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

inline Vector vec1(double v) {
  Vector x(1);
  x(0) = v;
  return x;
}

inline LQProblem scalar_problem(KernelSpec kernel, double B, double Q, double Q0,
                                double T = 1.0) {
  LQProblem p;
  p.n = 1;
  p.m = 1;
  p.T = T;
  p.kernel = std::move(kernel);
  p.B = mat1(B);
  p.Q = mat1(Q);
  p.Q0 = mat1(Q0);
  return validate_problem(p);
}

// Classical LQR reduction: no memory, closed form P0(tau) = tanh(T - tau).
inline LQProblem tanh_problem() { return scalar_problem(KernelSpec::zero(), 1, 1, 0); }

// Scalar problem with unit memory kernel; resolvent is cosh(t).
inline LQProblem scalar_memory_problem() {
  return scalar_problem(KernelSpec::constant(mat1(1.0)), 1, 1, 1);
}

// Two-dimensional rotation kernel driven through the first component.
inline LQProblem desk_problem() {
  LQProblem p;
  p.n = 2;
  p.m = 1;
  p.T = 1.0;
  Matrix N(2, 2);
  N << 0, 1, -1, 0;
  p.kernel = KernelSpec::constant(N);
  p.B = Matrix(2, 1);
  p.B << 1, 0;
  p.Q = Matrix::Identity(2, 2);
  p.Q0 = Matrix::Identity(2, 2);
  return validate_problem(p);
}

inline Vector desk_x0() {
  Vector x(2);
  x << 1.0, -0.5;
  return x;
}

inline Matrix rand_mat(std::mt19937_64& rng, int r, int c, double s) {
  std::uniform_real_distribution<double> d(-s, s);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

inline LQProblem random_problem(std::mt19937_64& rng, int n = 2, int m = 1) {
  LQProblem p;
  p.n = n;
  p.m = m;
  p.T = 1.0;
  p.kernel = KernelSpec::constant(rand_mat(rng, n, n, 1.0));
  p.B = rand_mat(rng, n, m, 1.0);
  const Matrix A = rand_mat(rng, n, n, 0.7);
  p.Q = A.transpose() * A;
  const Matrix A0 = rand_mat(rng, n, n, 0.7);
  p.Q0 = A0.transpose() * A0;
  return validate_problem(p);
}

inline ControlSignal smooth_control(std::mt19937_64& rng, const Grid& g, int start, int m,
                                    double amp) {
  std::uniform_real_distribution<double> dw(1.0, 6.0), dp(0.0, 6.28), dc(-amp, amp);
  const double w = dw(rng), ph = dp(rng), c0 = dc(rng);
  ControlSignal u{g, start, {}};
  for (int j = start; j <= g.M; ++j) {
    Vector v(m);
    for (int q = 0; q < m; ++q) v(q) = c0 + amp * std::sin(w * g.node(j) + ph + q);
    u.u.push_back(v);
  }
  return u;
}

// States are drawn as genuine trajectory snapshots so the tail is the
// real past of the head (x_tail.back() == x_hat).
inline StatePair random_state(std::mt19937_64& rng, const LQProblem& p, const Grid& g,
                              int a) {
  const Vector x0 = rand_mat(rng, p.n, 1, 1.0);
  if (a == 0) return initial_state(x0);
  const ControlSignal u = smooth_control(rng, g, 0, p.m, 0.7);
  return evolve(p, g, initial_state(x0), u, g.node(a));
}

inline double sup_traj(const Trajectory& x) {
  double s = 0;
  for (const auto& v : x.x) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

inline double sup_ctrl(const ControlSignal& u) {
  double s = 0;
  for (const auto& v : u.u) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

inline double sup_dist(const ControlSignal& a, const ControlSignal& b) {
  double s = 0;
  for (int j = std::max(a.start, b.start); j <= a.grid.M; ++j) {
    s = std::max(s, (a.u[j - a.start] - b.u[j - b.start]).cwiseAbs().maxCoeff());
  }
  return s;
}

}  // namespace testsupport
