#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace vlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a problem description violates the model contract
/// (dimension mismatch, indefinite cost weight, malformed kernel, ...).
class InvalidProblem : public std::invalid_argument {
 public:
  explicit InvalidProblem(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation cannot continue (singular system,
/// non-finite state, missing prerequisite data).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vlqr
