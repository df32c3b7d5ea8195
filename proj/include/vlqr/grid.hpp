#pragma once

#include <span>
#include <vector>

#include "vlqr/types.hpp"

namespace vlqr {

/// Uniform time grid t_j = j*h on [0, T] with t_M == T exactly.
struct Grid {
  double T = 0.0;
  int M = 0;
  double h = 0.0;

  double node(int j) const { return j == M ? T : j * h; }

  /// Index of a node-aligned time; throws InvalidProblem if t is not
  /// within 1e-9*h of a grid node.
  int index_of(double t) const;
};

Grid make_grid(double T, int M);

/// Composite trapezoid over consecutive node samples spaced h apart.
/// A single sample integrates to zero.
double trapezoid(std::span<const double> samples, double h);

/// Trapezoid weights for nodes a..b: h/2 at the ends, h inside,
/// all zero when a == b.
std::vector<double> trapezoid_weights(int a, int b, double h);

/// Trapezoid of f(j) for j = a..b where f returns an Eigen expression
/// or a double. Returns the zero value of f's type when a == b.
template <typename F>
auto trapezoid_sum(int a, int b, double h, F&& f) {
  if constexpr (std::is_arithmetic_v<std::decay_t<decltype(f(a))>>) {
    if (a == b) return 0.0;
    double acc = 0.5 * f(a);
    for (int j = a + 1; j < b; ++j) acc += f(j);
    acc += 0.5 * f(b);
    return acc * h;
  } else {
    auto acc = (0.5 * f(a)).eval();
    if (a == b) {
      acc *= 0.0;
      return acc;
    }
    for (int j = a + 1; j < b; ++j) acc += f(j);
    acc += 0.5 * f(b);
    acc *= h;
    return acc;
  }
}

}  // namespace vlqr
