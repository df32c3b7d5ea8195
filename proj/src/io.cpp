#include "vlqr/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace vlqr {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& msg) { throw InvalidProblem(msg); }

Matrix parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) bad(name + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) bad(name + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) bad(name + " has a non-numeric entry");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return out;
}

Vector parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) bad(name + " must be an array of numbers");
  Vector out(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) bad(name + " has a non-numeric entry");
    out(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return out;
}

KernelSpec parse_kernel(const json& j) {
  if (!j.is_object() || !j.contains("type")) bad("kernel must be an object with a type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "zero") return KernelSpec::zero();
  if (type == "constant") {
    if (!j.contains("matrix")) bad("constant kernel needs a matrix");
    return KernelSpec::constant(parse_matrix(j.at("matrix"), "kernel matrix"));
  }
  if (type == "polynomial") {
    if (!j.contains("coefficients")) bad("polynomial kernel needs coefficients");
    std::vector<Matrix> coeffs;
    for (const auto& c : j.at("coefficients")) {
      coeffs.push_back(parse_matrix(c, "kernel coefficient"));
    }
    return KernelSpec::polynomial(std::move(coeffs));
  }
  if (type == "exp_poly") {
    if (!j.contains("terms")) bad("exp_poly kernel needs terms");
    std::vector<std::pair<double, Matrix>> terms;
    for (const auto& t : j.at("terms")) {
      if (!t.contains("rate") || !t.contains("matrix")) {
        bad("exp_poly term needs rate and matrix");
      }
      terms.emplace_back(t.at("rate").get<double>(),
                         parse_matrix(t.at("matrix"), "kernel term matrix"));
    }
    return KernelSpec::exp_poly(std::move(terms));
  }
  if (type == "samples") {
    if (!j.contains("times") || !j.contains("values")) bad("sample kernel needs times and values");
    std::vector<double> times;
    for (const auto& t : j.at("times")) times.push_back(t.get<double>());
    std::vector<Matrix> values;
    for (const auto& v : j.at("values")) values.push_back(parse_matrix(v, "kernel sample"));
    return KernelSpec::samples(std::move(times), std::move(values));
  }
  bad("unknown kernel type '" + type + "'");
}

void format_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') bad("CSV entry '" + s + "' is not a number");
  return v;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  try {
    RunConfig cfg;
    LQProblem p;
    p.n = doc.at("n").get<int>();
    p.m = doc.at("m").get<int>();
    p.T = doc.at("T").get<double>();
    p.kernel = parse_kernel(doc.at("kernel"));
    p.B = parse_matrix(doc.at("B"), "B");
    p.Q = parse_matrix(doc.at("Q"), "Q");
    p.Q0 = parse_matrix(doc.at("Q0"), "Q0");
    cfg.problem = validate_problem(std::move(p));

    cfg.grid_points = doc.at("grid_points").get<int>();
    const Grid g = make_grid(cfg.problem.T, cfg.grid_points);

    const json& init = doc.at("initial");
    cfg.initial.tau = init.contains("tau") ? init.at("tau").get<double>() : 0.0;
    const int a = g.index_of(cfg.initial.tau);
    cfg.initial.tau = g.node(a);
    cfg.initial.x_hat = parse_vector(init.at("x_hat"), "x_hat");
    if (cfg.initial.x_hat.size() != cfg.problem.n) bad("x_hat has wrong dimension");

    const bool zero_tail = !init.contains("x_tail") ||
                           (init.at("x_tail").is_string() &&
                            init.at("x_tail").get<std::string>() == "zero");
    if (a == 0) {
      if (!zero_tail && !init.at("x_tail").empty()) {
        bad("x_tail must be empty or \"zero\" when tau = 0");
      }
    } else if (zero_tail) {
      cfg.initial.x_tail.assign(static_cast<std::size_t>(a) + 1,
                                Vector::Zero(cfg.problem.n));
      cfg.initial.x_tail[a] = cfg.initial.x_hat;
    } else {
      const json& tail = init.at("x_tail");
      if (!tail.is_array() || static_cast<int>(tail.size()) != a + 1) {
        bad("x_tail must hold one sample per node on [0, tau] (" + std::to_string(a + 1) +
            " rows)");
      }
      for (const auto& row : tail) {
        Vector v = parse_vector(row, "x_tail row");
        if (v.size() != cfg.problem.n) bad("x_tail row has wrong dimension");
        cfg.initial.x_tail.push_back(std::move(v));
      }
    }
    return cfg;
  } catch (const json::exception& e) {
    bad(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidProblem("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidProblem(std::string("config parse error: ") + e.what());
  }
  return parse_config(doc);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& x) {
  const Eigen::Index n = x.x.empty() ? 0 : x.x.front().size();
  os << "t";
  for (Eigen::Index c = 0; c < n; ++c) os << ",x_" << c;
  os << "\n";
  for (std::size_t k = 0; k < x.x.size(); ++k) {
    format_double(os, x.grid.node(x.start + static_cast<int>(k)));
    for (Eigen::Index c = 0; c < n; ++c) {
      os << ",";
      format_double(os, x.x[k](c));
    }
    os << "\n";
  }
}

void write_control_csv(std::ostream& os, const ControlSignal& u) {
  const Eigen::Index m = u.u.empty() ? 0 : u.u.front().size();
  os << "t";
  for (Eigen::Index c = 0; c < m; ++c) os << ",u_" << c;
  os << "\n";
  for (std::size_t k = 0; k < u.u.size(); ++k) {
    format_double(os, u.grid.node(u.start + static_cast<int>(k)));
    for (Eigen::Index c = 0; c < m; ++c) {
      os << ",";
      format_double(os, u.u[k](c));
    }
    os << "\n";
  }
}

ControlSignal read_control_csv(std::istream& is, const Grid& g, int m) {
  std::string line;
  if (!std::getline(is, line)) bad("control CSV is empty");
  const auto header = split_csv_line(line);
  if (static_cast<int>(header.size()) != m + 1) {
    bad("control CSV has " + std::to_string(header.size()) + " columns, expected " +
        std::to_string(m + 1));
  }

  ControlSignal u{g, -1, {}};
  int expected = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto parts = split_csv_line(line);
    if (static_cast<int>(parts.size()) != m + 1) {
      bad("control CSV row has " + std::to_string(parts.size()) + " columns, expected " +
          std::to_string(m + 1));
    }
    const int node = g.index_of(parse_number(parts[0]));
    if (u.start < 0) {
      u.start = node;
    } else if (node != expected) {
      bad("control CSV nodes are not consecutive grid nodes");
    }
    expected = node + 1;
    Vector v(m);
    for (int c = 0; c < m; ++c) v(c) = parse_number(parts[c + 1]);
    u.u.push_back(std::move(v));
  }
  if (u.u.empty()) bad("control CSV has no data rows");
  return u;
}

void write_p0_csv(std::ostream& os, const RiccatiSolution& sol) {
  const int n = sol.n();
  os << "tau";
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) os << ",p_" << r << "_" << c;
  }
  os << "\n";
  for (int j = sol.grid().M; j >= 0; --j) {
    format_double(os, sol.grid().node(j));
    const auto P = sol.P0(j);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        os << ",";
        format_double(os, P(r, c));
      }
    }
    os << "\n";
  }
}

ordered_json p1_to_json(const RiccatiSolution& sol) {
  const int n = sol.n();
  ordered_json out;
  out["T"] = sol.grid().T;
  out["M"] = sol.grid().M;
  out["n"] = n;
  ordered_json entries = ordered_json::array();
  for (int j = 0; j <= sol.grid().M; ++j) {
    for (int i = 0; i <= j; ++i) {
      ordered_json e;
      e["j"] = j;
      e["i"] = i;
      const auto P = sol.P1(j, i);
      ordered_json value = ordered_json::array();
      for (int r = 0; r < n; ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < n; ++c) row.push_back(P(r, c));
        value.push_back(std::move(row));
      }
      e["value"] = std::move(value);
      entries.push_back(std::move(e));
    }
  }
  out["entries"] = std::move(entries);
  return out;
}

ordered_json report_to_json(const ComparisonReport& rep) {
  ordered_json out;
  out["costs"] = {{"open_loop", rep.cost_open_loop},
                  {"riccati", rep.cost_riccati},
                  {"oracle", rep.cost_oracle}};
  out["control_dist"] = {{"open_loop_riccati", rep.dist_open_loop_riccati},
                         {"open_loop_oracle", rep.dist_open_loop_oracle},
                         {"riccati_oracle", rep.dist_riccati_oracle}};
  out["value_triple"] = {rep.value_open_loop, rep.value_riccati, rep.value_oracle};
  if (rep.residuals) {
    out["residuals"] = {rep.residuals->p0, rep.residuals->p1, rep.residuals->k};
  } else {
    out["residuals"] = ordered_json::array();
  }
  out["grid"] = {{"T", rep.T}, {"M", rep.M}};
  return out;
}

void write_kernel_dump(std::ostream& os, const RiccatiSolution& sol) {
  if (!sol.has_kernel_history()) {
    throw NumericalError("kernel dump requires the stored kernel history");
  }
  const char magic[8] = {'V', 'L', 'Q', 'R', 'K', 'B', '0', '1'};
  os.write(magic, sizeof(magic));
  const std::int32_t n = sol.n();
  const std::int32_t M = sol.grid().M;
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&M), sizeof(M));
  std::vector<double> row_major(static_cast<std::size_t>(n) * n);
  for (int j = 0; j <= M; ++j) {
    for (int i = 0; i <= j; ++i) {
      for (int l = 0; l <= i; ++l) {
        const Matrix blk = sol.K(j, i, l);
        for (int r = 0; r < n; ++r) {
          for (int c = 0; c < n; ++c) row_major[static_cast<std::size_t>(r) * n + c] = blk(r, c);
        }
        os.write(reinterpret_cast<const char*>(row_major.data()),
                 static_cast<std::streamsize>(row_major.size() * sizeof(double)));
      }
    }
  }
}

}  // namespace vlqr
