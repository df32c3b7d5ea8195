#include "vlqr/grid.hpp"

#include <cmath>

namespace vlqr {

Grid make_grid(double T, int M) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw InvalidProblem("make_grid: horizon T must be positive and finite");
  }
  if (M < 2) {
    throw InvalidProblem("make_grid: need at least 2 intervals (M >= 2)");
  }
  return Grid{T, M, T / M};
}

int Grid::index_of(double t) const {
  const double j = std::round(t / h);
  if (j < 0 || j > M || std::abs(t - node(static_cast<int>(j))) > 1e-9 * h) {
    throw InvalidProblem("time " + std::to_string(t) + " is not aligned with the grid");
  }
  return static_cast<int>(j);
}

double trapezoid(std::span<const double> samples, double h) {
  if (samples.empty()) {
    throw InvalidProblem("trapezoid: no samples");
  }
  if (samples.size() == 1) return 0.0;
  double acc = 0.5 * (samples.front() + samples.back());
  for (std::size_t j = 1; j + 1 < samples.size(); ++j) acc += samples[j];
  return acc * h;
}

std::vector<double> trapezoid_weights(int a, int b, double h) {
  std::vector<double> w(static_cast<std::size_t>(b - a) + 1, h);
  if (a == b) {
    w[0] = 0.0;
    return w;
  }
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

}  // namespace vlqr
