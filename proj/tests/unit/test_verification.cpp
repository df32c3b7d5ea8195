#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "support.hpp"
#include "vlqr/linalg.hpp"

using namespace vlqr;
using namespace testsupport;

namespace {

Vector stack(const ControlSignal& u) {
  const int m = static_cast<int>(u.u.front().size());
  Vector v(static_cast<Eigen::Index>(u.u.size()) * m);
  for (std::size_t k = 0; k < u.u.size(); ++k) {
    v.segment(static_cast<Eigen::Index>(k) * m, m) = u.u[k];
  }
  return v;
}

}  // namespace

TEST_CASE("discrete oracle closed forms") {
  SUBCASE("no control authority") {
    LQProblem p = desk_problem();
    p.B = Matrix::Zero(2, 1);
    p = validate_problem(p);
    const Grid g = make_grid(1.0, 100);
    const DiscreteOptimum d = discrete_optimal_control(p, g, initial_state(desk_x0()));
    for (const auto& v : d.u.u) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    const ControlSignal zero = zero_control(g, 0, 1);
    const double plain = cost(p, simulate(p, g, initial_state(desk_x0()), zero), zero);
    CHECK(std::abs(d.cost - plain) <= 1e-10 * plain);
  }
  SUBCASE("no cost weights") {
    const LQProblem p = scalar_problem(KernelSpec::constant(mat1(1.0)), 1, 0, 0);
    const Grid g = make_grid(1.0, 80);
    const DiscreteOptimum d = discrete_optimal_control(p, g, initial_state(vec1(1.0)));
    for (const auto& v : d.u.u) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.cost == 0.0);
  }
  SUBCASE("classical LQR value at fine resolution") {
    const LQProblem p = tanh_problem();
    const Grid g = make_grid(1.0, 1000);
    const DiscreteOptimum d = discrete_optimal_control(p, g, initial_state(vec1(1.0)));
    CHECK(std::abs(d.cost - std::tanh(1.0)) < 2e-3);
  }
}

TEST_CASE("discrete LQ structure") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 3; ++t) {
    const LQProblem p = random_problem(rng);
    const Grid g = make_grid(1.0, 40);
    const StatePair s = random_state(rng, p, g, t == 2 ? 10 : 0);
    const DiscreteLQ d = build_discrete_lq(p, g, s);
    CHECK((d.hessian - d.hessian.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, d.hessian.norm()));
    CHECK(min_symmetric_eigenvalue(d.hessian) > 0.0);
  }
}

TEST_CASE("oracle is the discrete minimizer") {
  const LQProblem p = desk_problem();
  const Grid g = make_grid(1.0, 120);
  const StatePair s = initial_state(desk_x0());
  const DiscreteLQ d = build_discrete_lq(p, g, s);
  const DiscreteOptimum opt = discrete_optimal_control(p, g, s);

  CHECK(std::abs(discrete_cost(p, d, stack(opt.u)) - opt.cost) <= 1e-12 * opt.cost);

  const Resolvent r = compute_resolvent(p, g);
  const ControlSignal uplus = optimal_control_open_loop(p, r, g, s);
  CHECK(opt.cost <= discrete_cost(p, d, stack(uplus)));
  CHECK(opt.cost <= discrete_cost(p, d, Vector::Zero(d.G.cols())));
  std::mt19937_64 rng(71);
  for (int t = 0; t < 5; ++t) {
    CHECK(opt.cost <= discrete_cost(p, d, stack(smooth_control(rng, g, 0, 1, 1.0))));
  }
}

TEST_CASE("gradient check") {
  SUBCASE("without control authority the gradient is 2u") {
    LQProblem p = desk_problem();
    p.B = Matrix::Zero(2, 1);
    p = validate_problem(p);
    const Grid g = make_grid(1.0, 100);
    const Resolvent r = compute_resolvent(p, g);
    std::mt19937_64 rng(7);
    const ControlSignal u = smooth_control(rng, g, 0, 1, 1.0);
    const GradientReport gr = gradient_check(p, r, g, initial_state(desk_x0()), u, 10, 3);
    CHECK(std::abs(gr.max_abs_gradient - 2 * sup_ctrl(u)) <= 1e-13);
    CHECK(gr.max_deviation <= 1e-6);
  }
  SUBCASE("the optimal control is a stationary point") {
    const LQProblem p = desk_problem();
    const Grid g = make_grid(1.0, 200);
    const Resolvent r = compute_resolvent(p, g);
    const StatePair s = initial_state(desk_x0());
    const ControlSignal u = optimal_control_open_loop(p, r, g, s);
    const Trajectory x = simulate(p, g, s, u);
    const double scale = std::max({1.0, sup_traj(x), sup_ctrl(u)});
    const GradientReport gr = gradient_check(p, r, g, s, u, 10, 5);
    CHECK(gr.max_abs_gradient <= 10 * g.h * g.h * scale);
  }
  SUBCASE("finite differences agree along random controls") {
    const LQProblem p = desk_problem();
    const Grid g = make_grid(1.0, 200);
    const Resolvent r = compute_resolvent(p, g);
    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
      const ControlSignal u = smooth_control(rng, g, 0, 1, 1.0);
      const GradientReport gr =
          gradient_check(p, r, g, initial_state(desk_x0()), u, 10, 100 + t);
      CHECK(gr.max_deviation <= std::max(1e-6, 5 * g.h * g.h));
    }
  }
}

TEST_CASE("local optimality inequality") {
  const LQProblem p = desk_problem();
  const Grid g = make_grid(1.0, 200);
  const Resolvent r = compute_resolvent(p, g);
  const StatePair s = initial_state(desk_x0());
  const ControlSignal uplus = optimal_control_open_loop(p, r, g, s);
  const Trajectory x = simulate(p, g, s, uplus);
  const double scale = std::max({1.0, sup_traj(x), sup_ctrl(uplus)});

  SUBCASE("equality along the optimal control") {
    for (double tau1 : {0.25, 0.5, 0.75}) {
      const LoiReport rep = verify_loi(p, r, g, s, uplus, tau1);
      CHECK(std::abs(rep.slack) <= 10 * g.h * g.h * scale);
    }
  }
  SUBCASE("strict suboptimality under an offset") {
    ControlSignal off = uplus;
    for (auto& v : off.u) v.array() += 1.0;
    const LoiReport rep = verify_loi(p, r, g, s, off, 0.5);
    CHECK(rep.slack > 0.0);
  }
  SUBCASE("no control authority leaves no slack") {
    LQProblem pz = desk_problem();
    pz.B = Matrix::Zero(2, 1);
    pz = validate_problem(pz);
    const Grid gz = make_grid(1.0, 100);
    const Resolvent rz = compute_resolvent(pz, gz);
    const LoiReport rep =
        verify_loi(pz, rz, gz, initial_state(desk_x0()), zero_control(gz, 0, 1), 0.5);
    CHECK(std::abs(rep.slack) <= 1e-10 * std::max(1.0, rep.lhs));
  }
}

TEST_CASE("three-route comparison") {
  SUBCASE("classical LQR case agrees with the closed form") {
    const LQProblem p = tanh_problem();
    const ComparisonReport rep = compare_all(p, make_grid(1.0, 1000), vec1(1.0));
    CHECK(std::abs(rep.cost_open_loop - std::tanh(1.0)) < 2e-3);
    CHECK(std::abs(rep.cost_riccati - std::tanh(1.0)) < 2e-3);
    CHECK(std::abs(rep.cost_oracle - std::tanh(1.0)) < 2e-3);
    CHECK(std::abs(rep.value_open_loop - std::tanh(1.0)) < 2e-3);
    CHECK(std::abs(rep.value_riccati - std::tanh(1.0)) < 2e-3);
    CHECK(std::abs(rep.value_oracle - std::tanh(1.0)) < 2e-3);
  }
  SUBCASE("without control authority the three routes coincide") {
    LQProblem p = desk_problem();
    p.B = Matrix::Zero(2, 1);
    p = validate_problem(p);
    const ComparisonReport rep = compare_all(p, make_grid(1.0, 100), desk_x0());
    CHECK(rep.dist_open_loop_riccati == 0.0);
    CHECK(rep.dist_open_loop_oracle == 0.0);
    CHECK(rep.dist_riccati_oracle == 0.0);
    const double scale = std::max(1.0, rep.cost_open_loop);
    CHECK(std::abs(rep.cost_open_loop - rep.cost_riccati) <= 1e-10 * scale);
    CHECK(std::abs(rep.cost_open_loop - rep.cost_oracle) <= 1e-10 * scale);
  }
  SUBCASE("routes draw together under refinement") {
    const LQProblem p = scalar_memory_problem();
    const ComparisonReport a = compare_all(p, make_grid(1.0, 100), vec1(1.0));
    const ComparisonReport b = compare_all(p, make_grid(1.0, 200), vec1(1.0));
    auto gaps = [](const ComparisonReport& r) {
      return std::array<double, 3>{std::abs(r.cost_open_loop - r.cost_riccati),
                                   std::abs(r.cost_open_loop - r.cost_oracle),
                                   std::abs(r.cost_riccati - r.cost_oracle)};
    };
    const auto ga = gaps(a), gb = gaps(b);
    for (int i = 0; i < 3; ++i) CHECK(ga[i] / gb[i] >= 2.0);
    // control distances carry a first-order component; they halve
    CHECK(a.dist_open_loop_riccati / b.dist_open_loop_riccati >= 1.8);
    CHECK(a.dist_open_loop_oracle / b.dist_open_loop_oracle >= 1.8);
    CHECK(a.dist_riccati_oracle / b.dist_riccati_oracle >= 1.8);
  }
  SUBCASE("cost spread shrinks monotonically over three levels") {
    const LQProblem p = scalar_memory_problem();
    auto spread = [&](int M) {
      const ComparisonReport r = compare_all(p, make_grid(1.0, M), vec1(1.0));
      const double mx = std::max({r.cost_open_loop, r.cost_riccati, r.cost_oracle});
      const double mn = std::min({r.cost_open_loop, r.cost_riccati, r.cost_oracle});
      return mx - mn;
    };
    const double s1 = spread(100), s2 = spread(200), s3 = spread(400);
    CHECK(s2 < s1);
    CHECK(s3 < s2);
  }
}
