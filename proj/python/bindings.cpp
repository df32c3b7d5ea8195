#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vlqr/io.hpp"

namespace py = pybind11;

namespace {

using namespace vlqr;

Matrix stack_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows[k];
  return out;
}

std::vector<double> node_times(const Grid& g, int start, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = g.node(start + static_cast<int>(k));
  return t;
}

}  // namespace

PYBIND11_MODULE(_vlqr, m) {
  m.doc() = "Finite-horizon LQR for Volterra integro-differential systems";

  py::register_exception<InvalidProblem>(m, "InvalidProblem", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<Grid>(m, "Grid")
      .def_readonly("T", &Grid::T)
      .def_readonly("M", &Grid::M)
      .def_readonly("h", &Grid::h)
      .def("node", &Grid::node)
      .def("index_of", &Grid::index_of);
  m.def("make_grid", &make_grid, py::arg("T"), py::arg("M"));

  py::class_<KernelSpec>(m, "Kernel")
      .def_static("zero", &KernelSpec::zero)
      .def_static("constant", &KernelSpec::constant, py::arg("value"))
      .def_static("polynomial", &KernelSpec::polynomial, py::arg("coefficients"))
      .def_static("exp_poly", &KernelSpec::exp_poly, py::arg("terms"))
      .def_static("samples", &KernelSpec::samples, py::arg("times"), py::arg("values"));
  m.def(
      "eval_kernel",
      [](const KernelSpec& k, double t, int n) { return eval_kernel(k, t, n); },
      py::arg("kernel"), py::arg("t"), py::arg("n"));

  py::class_<LQProblem>(m, "Problem")
      .def_readonly("n", &LQProblem::n)
      .def_readonly("m", &LQProblem::m)
      .def_readonly("T", &LQProblem::T)
      .def_readonly("B", &LQProblem::B)
      .def_readonly("Q", &LQProblem::Q)
      .def_readonly("Q0", &LQProblem::Q0)
      .def("kernel_at", &LQProblem::kernel_at, py::arg("t"));
  m.def(
      "make_problem",
      [](int n, int mm, double T, const KernelSpec& kernel, Matrix B, Matrix Q, Matrix Q0) {
        LQProblem p;
        p.n = n;
        p.m = mm;
        p.T = T;
        p.kernel = kernel;
        p.B = std::move(B);
        p.Q = std::move(Q);
        p.Q0 = std::move(Q0);
        return validate_problem(std::move(p));
      },
      py::arg("n"), py::arg("m"), py::arg("T"), py::arg("kernel"), py::arg("B"),
      py::arg("Q"), py::arg("Q0"));

  py::class_<StatePair>(m, "StatePair")
      .def(py::init([](double tau, Vector x_hat, std::vector<Vector> x_tail) {
             StatePair s;
             s.tau = tau;
             s.x_hat = std::move(x_hat);
             s.x_tail = std::move(x_tail);
             return s;
           }),
           py::arg("tau"), py::arg("x_hat"), py::arg("x_tail") = std::vector<Vector>{})
      .def_readonly("tau", &StatePair::tau)
      .def_readonly("x_hat", &StatePair::x_hat)
      .def_readonly("x_tail", &StatePair::x_tail);
  m.def("initial_state", &initial_state, py::arg("x0"));

  py::class_<Resolvent>(m, "Resolvent")
      .def_readonly("grid", &Resolvent::grid)
      .def("Z0", [](const Resolvent& r, int j) { return r.Z0.at(j); }, py::arg("j"));
  m.def("compute_resolvent", &compute_resolvent, py::arg("problem"), py::arg("grid"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("start", &Trajectory::start)
      .def_property_readonly(
          "times", [](const Trajectory& t) { return node_times(t.grid, t.start, t.x.size()); })
      .def_property_readonly("values", [](const Trajectory& t) { return stack_rows(t.x); });

  py::class_<ControlSignal>(m, "ControlSignal")
      .def_readonly("start", &ControlSignal::start)
      .def_property_readonly(
          "times", [](const ControlSignal& u) { return node_times(u.grid, u.start, u.u.size()); })
      .def_property_readonly("values", [](const ControlSignal& u) { return stack_rows(u.u); });
  m.def(
      "control_from_samples",
      [](const Grid& g, int start, const Matrix& samples) {
        ControlSignal u{g, start, {}};
        u.u.resize(static_cast<std::size_t>(samples.rows()));
        for (Eigen::Index k = 0; k < samples.rows(); ++k) u.u[k] = samples.row(k);
        return u;
      },
      py::arg("grid"), py::arg("start"), py::arg("samples"));

  m.def("simulate", &simulate, py::arg("problem"), py::arg("grid"), py::arg("state"),
        py::arg("control"), py::arg("end") = -1);
  m.def("evolve", &evolve, py::arg("problem"), py::arg("grid"), py::arg("state"),
        py::arg("control"), py::arg("tau1"));
  m.def("cost", &cost, py::arg("problem"), py::arg("trajectory"), py::arg("control"));
  m.def("zero_control", &zero_control, py::arg("grid"), py::arg("start"), py::arg("m"));

  m.def("optimal_control_open_loop", &optimal_control_open_loop, py::arg("problem"),
        py::arg("resolvent"), py::arg("grid"), py::arg("state"));
  m.def("value_function", &value_function, py::arg("problem"), py::arg("resolvent"),
        py::arg("grid"), py::arg("state"));

  py::class_<RiccatiSolution>(m, "RiccatiSolution")
      .def_property_readonly("grid", &RiccatiSolution::grid)
      .def_property_readonly("n", &RiccatiSolution::n)
      .def_property_readonly("kernel_sup",
                             [](const RiccatiSolution& s) { return s.kernel_sup(); })
      .def("P0", [](const RiccatiSolution& s, int j) { return Matrix(s.P0(j)); }, py::arg("j"))
      .def("P1",
           [](const RiccatiSolution& s, int j, int i) { return Matrix(s.P1(j, i)); },
           py::arg("j"), py::arg("i"))
      .def("K", &RiccatiSolution::K, py::arg("j"), py::arg("i"), py::arg("l"));
  m.def(
      "solve_riccati",
      [](const LQProblem& p, const Grid& g, bool store_kernel_history) {
        RiccatiOptions opts;
        opts.store_kernel_history = store_kernel_history;
        return solve_riccati(p, g, opts);
      },
      py::arg("problem"), py::arg("grid"), py::arg("store_kernel_history") = true);
  m.def("feedback_control", &feedback_control, py::arg("problem"), py::arg("solution"),
        py::arg("state"));
  m.def(
      "closed_loop_simulate",
      [](const LQProblem& p, const RiccatiSolution& sol, const Vector& x0) {
        ClosedLoopResult r = closed_loop_simulate(p, sol, x0);
        return py::make_tuple(r.x, r.u, r.cost);
      },
      py::arg("problem"), py::arg("solution"), py::arg("x0"));
  m.def(
      "riccati_residual",
      [](const LQProblem& p, const RiccatiSolution& sol) {
        const RiccatiResidual r = riccati_residual(p, sol);
        return py::make_tuple(r.p0, r.p1, r.k);
      },
      py::arg("problem"), py::arg("solution"));

  m.def(
      "discrete_optimal_control",
      [](const LQProblem& p, const Grid& g, const StatePair& s) {
        DiscreteOptimum o = discrete_optimal_control(p, g, s);
        return py::make_tuple(o.u, o.cost);
      },
      py::arg("problem"), py::arg("grid"), py::arg("state"));
  m.def(
      "compare_all",
      [](const LQProblem& p, const Grid& g, const Vector& x0, bool with_residuals) {
        CompareOptions opts;
        opts.with_residuals = with_residuals;
        const ComparisonReport rep = compare_all(p, g, x0, opts);
        return report_to_json(rep).dump();
      },
      py::arg("problem"), py::arg("grid"), py::arg("x0"), py::arg("with_residuals") = false);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("problem", &RunConfig::problem)
      .def_readonly("grid_points", &RunConfig::grid_points)
      .def_readonly("initial", &RunConfig::initial);
  m.def("load_config", &load_config, py::arg("path"));
  m.def(
      "config_from_json",
      [](const std::string& text) { return parse_config(nlohmann::json::parse(text)); },
      py::arg("text"));
}
