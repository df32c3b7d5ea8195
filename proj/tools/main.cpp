#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vlqr/io.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  int grid_points = 0;  // 0: use the config value
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
  cmd->add_option("--config", args.config_path, "Problem config JSON")->required();
  auto* out = cmd->add_option("--out", args.out_path, "Output path");
  if (out_required) out->required();
  cmd->add_option("--grid-points", args.grid_points,
                  "Override the config's grid_points");
}

vlqr::RunConfig load(const CommonArgs& args) {
  vlqr::RunConfig cfg = vlqr::load_config(args.config_path);
  if (args.grid_points > 0) {
    // Re-derive the grid-dependent pieces under the override.
    cfg.grid_points = args.grid_points;
    const vlqr::Grid g = vlqr::make_grid(cfg.problem.T, cfg.grid_points);
    const int a = g.index_of(cfg.initial.tau);
    if (a > 0 && static_cast<int>(cfg.initial.x_tail.size()) != a + 1) {
      throw vlqr::InvalidProblem(
          "--grid-points override is incompatible with the config's x_tail sampling");
    }
  }
  return cfg;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw vlqr::InvalidProblem("cannot open output file '" + path + "'");
  return os;
}

int cmd_simulate(const CommonArgs& args, const std::string& control_source) {
  const vlqr::RunConfig cfg = load(args);
  const vlqr::Grid g = vlqr::make_grid(cfg.problem.T, cfg.grid_points);
  const int a = g.index_of(cfg.initial.tau);

  vlqr::ControlSignal u{g, a, {}};
  if (control_source == "zero") {
    u = vlqr::zero_control(g, a, cfg.problem.m);
  } else {
    std::ifstream in(control_source);
    if (!in) throw vlqr::InvalidProblem("cannot open control CSV '" + control_source + "'");
    u = vlqr::read_control_csv(in, g, cfg.problem.m);
  }

  const vlqr::Trajectory x = vlqr::simulate(cfg.problem, g, cfg.initial, u);
  auto os = open_out(args.out_path);
  vlqr::write_trajectory_csv(os, x);

  ordered_json report;
  report["cost"] = vlqr::cost(cfg.problem, x, u);
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_open_loop(const CommonArgs& args) {
  const vlqr::RunConfig cfg = load(args);
  const vlqr::Grid g = vlqr::make_grid(cfg.problem.T, cfg.grid_points);
  const vlqr::Resolvent r = vlqr::compute_resolvent(cfg.problem, g);

  const vlqr::ControlSignal u =
      vlqr::optimal_control_open_loop(cfg.problem, r, g, cfg.initial);
  const vlqr::Trajectory x = vlqr::simulate(cfg.problem, g, cfg.initial, u);

  auto os = open_out(args.out_path);
  vlqr::write_control_csv(os, u);

  ordered_json report;
  report["value"] = vlqr::cost(cfg.problem, x, u);
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_riccati(const CommonArgs& args, const std::string& kernel_dump) {
  const vlqr::RunConfig cfg = load(args);
  const vlqr::Grid g = vlqr::make_grid(cfg.problem.T, cfg.grid_points);

  vlqr::RiccatiOptions opts;
  opts.store_kernel_history = true;
  const vlqr::RiccatiSolution sol = vlqr::solve_riccati(cfg.problem, g, opts);

  {
    auto os = open_out(args.out_path + "_P0.csv");
    vlqr::write_p0_csv(os, sol);
  }
  {
    auto os = open_out(args.out_path + "_P1.json");
    os << vlqr::p1_to_json(sol).dump() << "\n";
  }
  if (!kernel_dump.empty()) {
    auto os = open_out(kernel_dump, /*binary=*/true);
    vlqr::write_kernel_dump(os, sol);
  }

  const vlqr::RiccatiResidual res = vlqr::riccati_residual(cfg.problem, sol);
  ordered_json report;
  report["residuals"] = {{"p0", res.p0}, {"p1", res.p1}, {"k", res.k}};
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_compare(const CommonArgs& args, bool with_residuals) {
  const vlqr::RunConfig cfg = load(args);
  const vlqr::Grid g = vlqr::make_grid(cfg.problem.T, cfg.grid_points);
  if (g.index_of(cfg.initial.tau) != 0) {
    throw vlqr::InvalidProblem("compare runs from tau = 0 (closed-loop route)");
  }
  vlqr::CompareOptions opts;
  opts.with_residuals = with_residuals;
  const vlqr::ComparisonReport rep =
      vlqr::compare_all(cfg.problem, g, cfg.initial.x_hat, opts);
  const std::string text = vlqr::report_to_json(rep).dump(2);
  if (!args.out_path.empty()) {
    auto os = open_out(args.out_path);
    os << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_converge(const CommonArgs& args, int levels) {
  const vlqr::RunConfig cfg = load(args);
  if (levels < 1) throw vlqr::InvalidProblem("--levels must be >= 1");
  if (cfg.initial.tau != 0.0) {
    throw vlqr::InvalidProblem("converge runs from tau = 0");
  }

  std::ostringstream table;
  table << "M,cost_open_loop,cost_riccati,cost_oracle,spread,status\n";
  double prev_spread = 0.0;
  char buf[160];
  for (int lvl = 0; lvl < levels; ++lvl) {
    const int M = cfg.grid_points << lvl;
    const vlqr::Grid g = vlqr::make_grid(cfg.problem.T, M);
    const vlqr::ComparisonReport rep =
        vlqr::compare_all(cfg.problem, g, cfg.initial.x_hat, {});
    const double spread =
        std::max({std::abs(rep.cost_open_loop - rep.cost_riccati),
                  std::abs(rep.cost_open_loop - rep.cost_oracle),
                  std::abs(rep.cost_riccati - rep.cost_oracle)});
    const char* status = (lvl == 0 || spread <= prev_spread) ? "ok" : "order degraded";
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,", M, rep.cost_open_loop,
                  rep.cost_riccati, rep.cost_oracle, spread);
    table << buf << status << "\n";
    prev_spread = spread;
  }

  if (!args.out_path.empty()) {
    auto os = open_out(args.out_path);
    os << table.str();
  }
  std::cout << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon LQR for Volterra integro-differential systems"};
  app.require_subcommand(1);

  CommonArgs sim_args, ol_args, ric_args, cmp_args, cvg_args;
  std::string control_source = "zero";
  std::string kernel_dump;
  bool with_residuals = false;
  int levels = 1;

  auto* sim = app.add_subcommand("simulate", "Integrate the state equation");
  add_common(sim, sim_args, /*out_required=*/true);
  sim->add_option("--control", control_source, "zero or a control CSV path");

  auto* ol = app.add_subcommand("open-loop", "Solve the Fredholm optimal control");
  add_common(ol, ol_args, /*out_required=*/true);

  auto* ric = app.add_subcommand("riccati", "Solve the Riccati system");
  add_common(ric, ric_args, /*out_required=*/true);
  ric->add_option("--dump-kernel", kernel_dump, "Write the K history (binary)");

  auto* cmp = app.add_subcommand("compare", "Cross-validate the three routes");
  add_common(cmp, cmp_args, /*out_required=*/false);
  cmp->add_flag("--residuals", with_residuals, "Include Riccati residuals");

  auto* cvg = app.add_subcommand("converge", "Refinement study");
  add_common(cvg, cvg_args, /*out_required=*/false);
  cvg->add_option("--levels", levels, "Number of grid-doubling levels");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(sim_args, control_source);
    if (ol->parsed()) return cmd_open_loop(ol_args);
    if (ric->parsed()) return cmd_riccati(ric_args, kernel_dump);
    if (cmp->parsed()) return cmd_compare(cmp_args, with_residuals);
    if (cvg->parsed()) return cmd_converge(cvg_args, levels);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  } catch (const vlqr::InvalidProblem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const vlqr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
