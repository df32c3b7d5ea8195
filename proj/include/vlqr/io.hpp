#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "vlqr/verification.hpp"

namespace vlqr {

/// A problem instance plus run parameters, as read from a config file.
struct RunConfig {
  LQProblem problem;
  int grid_points = 0;
  StatePair initial;
};

/// Parse and validate a config JSON document. Throws InvalidProblem on
/// schema, dimension, or value errors.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// CSV with header t,x_0,..,x_{n-1}; one row per node, '.' decimal,
/// round-trip precision.
void write_trajectory_csv(std::ostream& os, const Trajectory& x);
void write_control_csv(std::ostream& os, const ControlSignal& u);

/// Read a control CSV produced by write_control_csv (or hand-written with
/// the same shape) against a known grid. Throws InvalidProblem on column
/// count or node misalignment.
ControlSignal read_control_csv(std::istream& is, const Grid& g, int m);

/// Rows tau,p_00,..,p_{n-1}{n-1} (row-major), tau descending from T.
void write_p0_csv(std::ostream& os, const RiccatiSolution& sol);

/// {"T","M","n","entries":[{"j","i","value"}...]} for the stored P1 levels.
nlohmann::ordered_json p1_to_json(const RiccatiSolution& sol);

nlohmann::ordered_json report_to_json(const ComparisonReport& rep);

/// Compact binary dump of the kernel history: magic "VLQRKB01", then
/// int32 n, M, followed per level j by the l <= i <= j blocks row-major.
void write_kernel_dump(std::ostream& os, const RiccatiSolution& sol);

}  // namespace vlqr
