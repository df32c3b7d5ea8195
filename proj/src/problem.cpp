#include "vlqr/problem.hpp"

#include <algorithm>
#include <cmath>

#include "vlqr/linalg.hpp"

namespace vlqr {

KernelSpec KernelSpec::constant(Matrix value) {
  KernelSpec k;
  k.form = Constant{std::move(value)};
  return k;
}

KernelSpec KernelSpec::polynomial(std::vector<Matrix> coeffs) {
  KernelSpec k;
  k.form = Polynomial{std::move(coeffs)};
  return k;
}

KernelSpec KernelSpec::exp_poly(std::vector<std::pair<double, Matrix>> terms) {
  KernelSpec k;
  k.form = ExpPoly{std::move(terms)};
  return k;
}

KernelSpec KernelSpec::samples(std::vector<double> times, std::vector<Matrix> values) {
  KernelSpec k;
  k.form = Samples{std::move(times), std::move(values)};
  return k;
}

Matrix eval_kernel(const KernelSpec& kernel, double t, int n) {
  if (t < -1e-12) {
    throw InvalidProblem("eval_kernel: negative lag " + std::to_string(t));
  }
  t = std::max(t, 0.0);

  struct Eval {
    double t;
    int n;

    Matrix operator()(const KernelSpec::Zero&) const { return Matrix::Zero(n, n); }

    Matrix operator()(const KernelSpec::Constant& c) const { return c.value; }

    Matrix operator()(const KernelSpec::Polynomial& p) const {
      if (p.coeffs.empty()) return Matrix::Zero(n, n);
      Matrix acc = p.coeffs.back();
      for (auto it = p.coeffs.rbegin() + 1; it != p.coeffs.rend(); ++it) {
        acc = t * acc + *it;
      }
      return acc;
    }

    Matrix operator()(const KernelSpec::ExpPoly& e) const {
      Matrix acc = Matrix::Zero(n, n);
      for (const auto& [rate, coeff] : e.terms) acc += std::exp(-rate * t) * coeff;
      return acc;
    }

    Matrix operator()(const KernelSpec::Samples& s) const {
      const double lo = s.times.front();
      const double hi = s.times.back();
      if (t < lo - 1e-12 || t > hi + 1e-12) {
        throw InvalidProblem("eval_kernel: lag " + std::to_string(t) +
                             " outside the sampled range");
      }
      const double tc = std::clamp(t, lo, hi);
      auto it = std::upper_bound(s.times.begin(), s.times.end(), tc);
      if (it == s.times.begin()) ++it;
      if (it == s.times.end()) --it;
      const std::size_t k = static_cast<std::size_t>(it - s.times.begin());
      const double t0 = s.times[k - 1], t1 = s.times[k];
      const double w = (tc - t0) / (t1 - t0);
      return (1.0 - w) * s.values[k - 1] + w * s.values[k];
    }
  };

  return std::visit(Eval{t, n}, kernel.form);
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidProblem(msg);
}

void check_square(const Matrix& A, int n, const std::string& name) {
  require(A.rows() == n && A.cols() == n,
          name + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

// Symmetrize a nearly symmetric weight and insist it is PSD up to a
// relative eigenvalue tolerance of 1e-10.
Matrix check_weight(Matrix W, int n, const std::string& name) {
  check_square(W, n, name);
  require(W.allFinite(), name + " has non-finite entries");
  W = 0.5 * (W + W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  require(lo >= -1e-10 * std::max(hi, 1e-300),
          name + " not positive semidefinite (min eigenvalue " + std::to_string(lo) + ")");
  return W;
}

void check_kernel(const KernelSpec& k, int n, double T) {
  struct Check {
    int n;
    double T;

    void operator()(const KernelSpec::Zero&) const {}

    void operator()(const KernelSpec::Constant& c) const {
      check_square(c.value, n, "kernel matrix");
      require(c.value.allFinite(), "kernel matrix has non-finite entries");
    }

    void operator()(const KernelSpec::Polynomial& p) const {
      for (const auto& c : p.coeffs) {
        check_square(c, n, "kernel coefficient");
        require(c.allFinite(), "kernel coefficient has non-finite entries");
      }
    }

    void operator()(const KernelSpec::ExpPoly& e) const {
      for (const auto& [rate, coeff] : e.terms) {
        require(std::isfinite(rate), "kernel rate is not finite");
        check_square(coeff, n, "kernel coefficient");
        require(coeff.allFinite(), "kernel coefficient has non-finite entries");
      }
    }

    void operator()(const KernelSpec::Samples& s) const {
      require(!s.times.empty() && s.times.size() == s.values.size(),
              "kernel samples: times and values must be non-empty and equal length");
      require(std::abs(s.times.front()) <= 1e-12,
              "kernel samples must start at lag 0");
      require(s.times.back() >= T - 1e-12,
              "kernel samples must cover lags up to the horizon");
      for (std::size_t i = 1; i < s.times.size(); ++i) {
        require(s.times[i] > s.times[i - 1],
                "kernel sample times must be strictly increasing");
      }
      for (const auto& v : s.values) {
        check_square(v, n, "kernel sample");
        require(v.allFinite(), "kernel sample has non-finite entries");
      }
    }
  };
  std::visit(Check{n, T}, k.form);
}

}  // namespace

LQProblem validate_problem(LQProblem p) {
  require(p.n >= 1, "state dimension n must be >= 1");
  require(p.m >= 1, "control dimension m must be >= 1");
  require(std::isfinite(p.T) && p.T > 0.0, "horizon T must be positive and finite");
  require(p.B.rows() == p.n && p.B.cols() == p.m,
          "B must be " + std::to_string(p.n) + "x" + std::to_string(p.m));
  require(p.B.allFinite(), "B has non-finite entries");
  p.Q = check_weight(std::move(p.Q), p.n, "Q");
  p.Q0 = check_weight(std::move(p.Q0), p.n, "Q0");
  check_kernel(p.kernel, p.n, p.T);
  return p;
}

StatePair initial_state(Vector x0) {
  StatePair s;
  s.tau = 0.0;
  s.x_hat = std::move(x0);
  return s;
}

}  // namespace vlqr
