#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace vlqr;
using namespace testsupport;

namespace {

// Closed form for N(t) = e^{-t}: differentiating the resolvent equation
// once gives Z'' + Z' - Z = 0 with Z(0)=1, Z'(0)=0.
double exp_kernel_resolvent(double t) {
  const double s = std::sqrt(5.0);
  const double r1 = (-1 + s) / 2, r2 = (-1 - s) / 2;
  const double a = -r2 / (r1 - r2), b = r1 / (r1 - r2);
  return a * std::exp(r1 * t) + b * std::exp(r2 * t);
}

}  // namespace

TEST_CASE("resolvent: zero kernel gives the identity at every node") {
  std::mt19937_64 rng(3);
  LQProblem p = random_problem(rng, 2, 1);
  p.kernel = KernelSpec::zero();
  const Grid g = make_grid(1.0, 50);
  const Resolvent r = compute_resolvent(p, g);
  for (int j = 0; j <= g.M; ++j) {
    CHECK((r.Z0[j] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("resolvent: Z0(0) is the identity exactly") {
  const LQProblem p = scalar_memory_problem();
  const Resolvent r = compute_resolvent(p, make_grid(1.0, 10));
  CHECK(r.Z0[0](0, 0) == 1.0);
}

TEST_CASE("resolvent: constant unit kernel reproduces cosh") {
  const LQProblem p = scalar_memory_problem();
  const Grid g = make_grid(1.0, 1000);
  const Resolvent r = compute_resolvent(p, g);
  CHECK(std::abs(r.Z0[g.M](0, 0) - std::cosh(1.0)) < 1e-4);
}

TEST_CASE("resolvent: exponential kernel matches its second-order ODE") {
  const LQProblem p = scalar_problem(KernelSpec::exp_poly({{1.0, mat1(1.0)}}), 1, 1, 0);
  const Grid g = make_grid(1.0, 1000);
  const Resolvent r = compute_resolvent(p, g);
  CHECK(std::abs(r.Z0[g.M](0, 0) - exp_kernel_resolvent(1.0)) < 1e-4);
}

TEST_CASE("resolvent: cosh-oracle error drops by >= 3.5 per grid doubling") {
  const LQProblem p = scalar_memory_problem();
  double prev = 0;
  for (int M : {250, 500, 1000}) {
    const Grid g = make_grid(1.0, M);
    const Resolvent r = compute_resolvent(p, g);
    const double err = std::abs(r.Z0[M](0, 0) - std::cosh(1.0));
    if (prev > 0) CHECK(prev / err >= 3.5);
    prev = err;
  }
}

TEST_CASE("history kernel closed forms") {
  SUBCASE("zero kernel") {
    LQProblem p = scalar_problem(KernelSpec::zero(), 1, 1, 0);
    const Grid g = make_grid(1.0, 20);
    const Resolvent r = compute_resolvent(p, g);
    CHECK(history_kernel(p, r, 15, 3, 5).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("empty integration range at t == tau") {
    const LQProblem p = scalar_memory_problem();
    const Grid g = make_grid(1.0, 20);
    const Resolvent r = compute_resolvent(p, g);
    CHECK(history_kernel(p, r, 5, 2, 5).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("unit kernel integrates cosh to sinh") {
    const LQProblem p = scalar_memory_problem();
    const Grid g = make_grid(1.0, 1000);
    const Resolvent r = compute_resolvent(p, g);
    // Y(1, 0; 0) = int_0^1 cosh(1 - xi) dxi = sinh(1)
    CHECK(std::abs(history_kernel(p, r, g.M, 0, 0)(0, 0) - std::sinh(1.0)) < 1e-3);
  }
  SUBCASE("argument ordering is enforced") {
    const LQProblem p = scalar_memory_problem();
    const Grid g = make_grid(1.0, 20);
    const Resolvent r = compute_resolvent(p, g);
    CHECK_THROWS_AS(history_kernel(p, r, 10, 7, 5), InvalidProblem);  // i > a
    CHECK_THROWS_AS(history_kernel(p, r, 5, 2, 10), InvalidProblem);  // a > j
  }
}

TEST_CASE("simulate: no dynamics keeps the state constant") {
  const LQProblem p = scalar_problem(KernelSpec::zero(), 1, 1, 0);
  const Grid g = make_grid(1.0, 100);
  const Trajectory x = simulate(p, g, initial_state(vec1(2.5)), zero_control(g, 0, 1));
  for (const auto& v : x.x) CHECK(v(0) == 2.5);
}

TEST_CASE("simulate: pure integrator is exact") {
  const LQProblem p = scalar_problem(KernelSpec::zero(), 1, 1, 0);
  const Grid g = make_grid(1.0, 100);
  ControlSignal u = zero_control(g, 0, 1);
  for (auto& v : u.u) v(0) = 1.0;
  const Trajectory x = simulate(p, g, initial_state(vec1(0.0)), u);
  for (int j = 0; j <= g.M; ++j) {
    CHECK(std::abs(x.x[j](0) - g.node(j)) < 1e-10);
  }
}

TEST_CASE("simulate: unit kernel reproduces cosh") {
  const LQProblem p = scalar_memory_problem();
  const Grid g = make_grid(1.0, 1000);
  const Trajectory x = simulate(p, g, initial_state(vec1(1.0)), zero_control(g, 0, 1));
  CHECK(std::abs(x.x[g.M](0) - std::cosh(1.0)) < 1e-4);
}

TEST_CASE("simulate validates its inputs") {
  const LQProblem p = scalar_memory_problem();
  const Grid g = make_grid(1.0, 10);
  SUBCASE("tail must hold a sample per node in [0, tau]") {
    StatePair s;
    s.tau = 0.3;
    s.x_hat = vec1(1.0);
    s.x_tail.assign(2, vec1(0.0));  // expected 4 samples
    CHECK_THROWS_AS(simulate(p, g, s, zero_control(g, 0, 1)), InvalidProblem);
  }
  SUBCASE("tau 0 must have an empty tail") {
    StatePair s;
    s.tau = 0.0;
    s.x_hat = vec1(1.0);
    s.x_tail.assign(1, vec1(0.0));
    CHECK_THROWS_AS(simulate(p, g, s, zero_control(g, 0, 1)), InvalidProblem);
  }
  SUBCASE("control must cover the span") {
    CHECK_THROWS_AS(simulate(p, g, initial_state(vec1(1.0)), zero_control(g, 3, 1)),
                    InvalidProblem);
  }
  SUBCASE("off-node tau is rejected") {
    StatePair s;
    s.tau = 0.123;
    s.x_hat = vec1(1.0);
    CHECK_THROWS_AS(simulate(p, g, s, zero_control(g, 0, 1)), InvalidProblem);
  }
}

TEST_CASE("simulate throws NumericalError when the state overflows") {
  const LQProblem p = scalar_problem(KernelSpec::constant(mat1(1e8)), 1, 1, 0);
  const Grid g = make_grid(1.0, 100);
  CHECK_THROWS_AS(simulate(p, g, initial_state(vec1(1.0)), zero_control(g, 0, 1)),
                  NumericalError);
}

TEST_CASE("evolve: advancing to the same node is the identity") {
  std::mt19937_64 rng(17);
  const LQProblem p = random_problem(rng);
  const Grid g = make_grid(1.0, 50);
  const StatePair s = random_state(rng, p, g, 10);
  const ControlSignal u = smooth_control(rng, g, 10, 1, 0.5);
  const StatePair out = evolve(p, g, s, u, s.tau);
  CHECK(out.tau == s.tau);
  CHECK((out.x_hat - s.x_hat).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(out.x_tail.size() == s.x_tail.size());
  for (std::size_t i = 0; i < s.x_tail.size(); ++i) {
    CHECK((out.x_tail[i] - s.x_tail[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("evolve preserves the history bit-identically") {
  std::mt19937_64 rng(18);
  const LQProblem p = random_problem(rng);
  const Grid g = make_grid(1.0, 50);
  const StatePair s = random_state(rng, p, g, 12);
  const ControlSignal u = smooth_control(rng, g, 12, 1, 0.5);
  const StatePair out = evolve(p, g, s, u, g.node(30));
  REQUIRE(out.x_tail.size() == 31);
  for (int i = 0; i <= 12; ++i) {
    CHECK((out.x_tail[i] - s.x_tail[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("evolve composition matches the direct advance") {
  std::mt19937_64 rng(19);
  double worst = 0, bound = 1e300;
  for (int t = 0; t < 10; ++t) {
    const LQProblem p = random_problem(rng);
    const Grid g = make_grid(1.0, 100);
    const int a = 10 + 5 * t, a1 = a + 15, a2 = 95;
    const StatePair s = random_state(rng, p, g, a);
    const ControlSignal u = smooth_control(rng, g, a, 1, 0.8);
    const StatePair direct = evolve(p, g, s, u, g.node(a2));
    const StatePair two = evolve(p, g, evolve(p, g, s, u, g.node(a1)), u, g.node(a2));
    double err = (direct.x_hat - two.x_hat).cwiseAbs().maxCoeff();
    double scale = 1.0;
    REQUIRE(direct.x_tail.size() == two.x_tail.size());
    for (std::size_t i = 0; i < direct.x_tail.size(); ++i) {
      err = std::max(err, (direct.x_tail[i] - two.x_tail[i]).cwiseAbs().maxCoeff());
      scale = std::max(scale, direct.x_tail[i].cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, err);
    bound = std::min(bound, 5 * g.h * g.h * scale);
  }
  CHECK(worst <= bound);
}

TEST_CASE("simulate agrees with the resolvent representation") {
  // x(t) = Z0(t-tau) x_hat + int_0^tau Y(t,s;tau) x_tail(s) ds
  //        + int_tau^t Z0(t-r) B u(r) dr, agreement at O(h^2)
  std::mt19937_64 rng(777);
  const LQProblem p = random_problem(rng);
  double prev = 0;
  for (int M : {100, 200}) {
    const Grid g = make_grid(1.0, M);
    const int a = M / 4;
    std::mt19937_64 rs(902);
    const StatePair s = random_state(rs, p, g, a);
    const ControlSignal u = smooth_control(rs, g, a, 1, 0.8);
    const Trajectory x = simulate(p, g, s, u);
    const Resolvent r = compute_resolvent(p, g);
    double err = 0;
    for (int j = a; j <= M; ++j) {
      Vector rep = r.Z0[j - a] * s.x_hat;
      rep += trapezoid_sum(0, a, g.h, [&](int i) -> Vector {
        return history_kernel(p, r, j, i, a) * s.x_tail[i];
      });
      rep += trapezoid_sum(a, j, g.h,
                           [&](int q) -> Vector { return r.Z0[j - q] * (p.B * u.u[q - a]); });
      err = std::max(err, (rep - x.x[j - a]).cwiseAbs().maxCoeff());
    }
    CHECK(err < 1e-4);
    if (prev > 0) CHECK(prev / err >= 2.5);
    prev = err;
  }
}

TEST_CASE("simulate is translation invariant for zero histories") {
  const LQProblem p = scalar_problem(KernelSpec::constant(mat1(0.8)), 1, 1, 1);
  const Grid g = make_grid(1.0, 100);
  const int a = 30;
  StatePair shifted;
  shifted.tau = g.node(a);
  shifted.x_hat = vec1(1.3);
  shifted.x_tail.assign(a + 1, vec1(0.0));
  ControlSignal uA{g, a, {}};
  for (int j = a; j <= g.M; ++j) uA.u.push_back(vec1(std::sin(0.1 * j)));
  const Trajectory xA = simulate(p, g, shifted, uA);

  ControlSignal uB{g, 0, {}};
  for (int j = 0; j <= g.M; ++j) uB.u.push_back(vec1(std::sin(0.1 * (j + a))));
  const Trajectory xB = simulate(p, g, initial_state(vec1(1.3)), uB, g.M - a);
  for (int k = 0; k <= g.M - a; ++k) {
    CHECK(xA.x[k](0) == xB.x[k](0));
  }
}

TEST_CASE("cost closed forms") {
  SUBCASE("zero trajectory and control") {
    const LQProblem p = scalar_memory_problem();
    const Grid g = make_grid(1.0, 20);
    const Trajectory x = simulate(p, g, initial_state(vec1(0.0)), zero_control(g, 0, 1));
    CHECK(cost(p, x, zero_control(g, 0, 1)) == 0.0);
  }
  SUBCASE("pure control energy") {
    const LQProblem p = scalar_problem(KernelSpec::zero(), 1, 0, 0);
    const Grid g = make_grid(1.0, 25);
    ControlSignal u = zero_control(g, 0, 1);
    for (auto& v : u.u) v(0) = 1.0;
    const Trajectory x = simulate(p, g, initial_state(vec1(0.0)), u);
    CHECK(cost(p, x, u) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("cosh trajectory under the running state weight") {
    const LQProblem p = scalar_problem(KernelSpec::constant(mat1(1.0)), 1, 1, 0);
    const Grid g = make_grid(1.0, 1000);
    const Trajectory x = simulate(p, g, initial_state(vec1(1.0)), zero_control(g, 0, 1));
    // int_0^1 cosh^2 = (sinh 2 + 2) / 4
    CHECK(std::abs(cost(p, x, zero_control(g, 0, 1)) - (std::sinh(2.0) + 2.0) / 4.0) < 1e-3);
  }
}

TEST_CASE("cost is nonnegative on random data") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const LQProblem p = random_problem(rng);
    const Grid g = make_grid(1.0, 40);
    const int a = 5 * (t % 5);
    const StatePair s = random_state(rng, p, g, a);
    const ControlSignal u = smooth_control(rng, g, a, 1, 1.0);
    const Trajectory x = simulate(p, g, s, u);
    CHECK(cost(p, x, u) >= 0.0);
  }
}

TEST_CASE("cost validates spans") {
  const LQProblem p = scalar_memory_problem();
  const Grid g = make_grid(1.0, 10);
  Trajectory x = simulate(p, g, initial_state(vec1(1.0)), zero_control(g, 0, 1), 5);
  CHECK_THROWS_AS(cost(p, x, zero_control(g, 0, 1)), InvalidProblem);
}
