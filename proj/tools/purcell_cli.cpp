// Command-line front end: solve an isoholonomic gait problem, replay a
// controls file, or audit a trajectory/costate pair against the optimality
// conditions. All file formats are the flat-text tables from purcell::io.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "purcell/errors.hpp"
#include "purcell/integrator.hpp"
#include "purcell/io.hpp"
#include "purcell/pmp.hpp"
#include "purcell/solver.hpp"

namespace {

using namespace purcell;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Flags {
  std::string config_path;
  std::string out_dir;
  std::string solver_name;
  std::string units_name;
  double tol = 0.0;
  int max_iter = 0;
  double seed_amplitude = 0.0;
  double phase_interval = 0.0;
  bool quiet = false;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_solver = nullptr;
  CLI::Option* o_units = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_max_iter = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_phase = nullptr;
};

void add_common(CLI::App* cmd, Flags& f) {
  f.o_config = cmd->add_option("--config", f.config_path, "run configuration file")
                   ->check(CLI::ExistingFile);
  f.o_out = cmd->add_option("--out", f.out_dir, "output directory");
  f.o_units = cmd->add_option("--units", f.units_name, "table export units")
                  ->check(CLI::IsMember({"deg", "rad"}));
  f.o_phase =
      cmd->add_option("--phase-interval", f.phase_interval, "seconds between phase-portrait rows")
          ->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", f.quiet, "suppress informational output");
}

// Precedence: built-in defaults, then the config file, then flags.
io::RunConfig effective_config(const Flags& f) {
  io::RunConfig rc;
  if (f.o_config && f.o_config->count()) rc = io::load_config(f.config_path);
  if (f.o_out && f.o_out->count()) rc.out_dir = f.out_dir;
  if (f.o_solver && f.o_solver->count()) {
    rc.solver.method = f.solver_name == "direct" ? SolveMethod::direct : SolveMethod::shooting;
  }
  if (f.o_units && f.o_units->count()) {
    rc.units = f.units_name == "deg" ? io::Units::degrees : io::Units::radians;
  }
  if (f.o_tol && f.o_tol->count()) {
    rc.solver.constraint_tolerance = f.tol;
    rc.solver.stationarity_tolerance = f.tol;
  }
  if (f.o_max_iter && f.o_max_iter->count()) rc.solver.max_outer_iterations = f.max_iter;
  if (f.o_seed && f.o_seed->count()) rc.solver.seed_amplitude = f.seed_amplitude;
  if (f.o_phase && f.o_phase->count()) rc.phase_interval = f.phase_interval;
  return rc;
}

int cmd_solve(const Flags& f) {
  const io::RunConfig rc = effective_config(f);
  const auto [spec, solver_config] = io::resolve(rc);

  Solution solution;
  try {
    solution = solve(spec, solver_config);
  } catch (const ConfigError&) {
    throw;  // bad inputs, not a solver outcome
  } catch (const Error& e) {
    solution.message = e.what();  // diverged; files below carry the diagnostics
  }

  const auto paths = io::write_solution(solution, rc);
  if (!f.quiet) {
    const char* status = solution.status == SolveStatus::certified        ? "certified"
                         : solution.status == SolveStatus::max_iterations ? "max_iterations"
                                                                          : "diverged";
    std::cout << "status: " << status << "\n";
    if (!solution.message.empty()) std::cout << "message: " << solution.message << "\n";
    std::cout << "cost: " << fmt(solution.cost) << "\n";
    std::cout << "terminal residual: " << fmt(solution.terminal.norm()) << "\n";
    std::cout << "max pmp residual: " << fmt(solution.residuals.max_residual()) << "\n";
    for (const auto& p : paths) std::cout << "wrote: " << p << "\n";
  }
  return solution.status == SolveStatus::certified ? 0 : 3;
}

int cmd_rollout(const std::string& controls_path, const Flags& f) {
  const io::RunConfig rc = effective_config(f);
  const auto controls = io::read_controls(controls_path);
  if (static_cast<int>(controls.size()) != rc.discretization.steps) {
    throw ConfigError("controls row count " + std::to_string(controls.size()) +
                      " does not match discretization.steps = " +
                      std::to_string(rc.discretization.steps));
  }
  const StateTrajectory traj =
      rollout(rc.geometry, se2::identity(), rc.alpha_bar, controls, rc.discretization);

  const std::string path = (std::filesystem::path(rc.out_dir) / "trajectory.csv").string();
  io::write_table(io::trajectory_table(traj, rc.units), path);
  if (!f.quiet) {
    const se2::GroupElement hol = holonomy(traj);
    std::cout << "holonomy: " << fmt(hol.x) << " " << fmt(hol.y) << " "
              << fmt(se2::canonical_angle(hol.theta)) << "\n";
    std::cout << "cost: " << fmt(cost(controls, rc.discretization.h)) << "\n";
    std::cout << "wrote: " << path << "\n";
  }
  return 0;
}

int cmd_check_pmp(const std::string& traj_path, const std::string& costate_path, const Flags& f) {
  const io::RunConfig rc = effective_config(f);
  const StateTrajectory traj = io::trajectory_from_table(io::read_table(traj_path), rc.units);
  const auto [costates, nu] = io::costates_from_table(io::read_table(costate_path));

  ResidualReport report;
  try {
    report = pmp_residuals(traj, costates, nu, rc.geometry);
  } catch (const Error& e) {
    throw IoError(e.what());  // mismatched files are an input problem
  }
  const double tol =
      std::max(rc.solver.constraint_tolerance, rc.solver.stationarity_tolerance);
  const bool ok = report.pass(tol);
  if (!f.quiet) {
    std::cout << format_report(report, tol);
    std::cout << (ok ? "PASS" : "FAIL") << " (max residual " << fmt(report.max_residual())
              << ", tolerance " << fmt(tol) << ")\n";
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-link low-Reynolds swimmer: optimal gaits with a certified holonomy target"};
  app.require_subcommand(1);

  Flags solve_flags;
  CLI::App* solve_cmd =
      app.add_subcommand("solve", "solve the configured problem and write result tables");
  add_common(solve_cmd, solve_flags);
  solve_flags.o_solver = solve_cmd->add_option("--solver", solve_flags.solver_name, "method")
                             ->check(CLI::IsMember({"direct", "shooting"}));
  solve_flags.o_tol = solve_cmd
                          ->add_option("--tol", solve_flags.tol,
                                       "constraint and stationarity tolerance")
                          ->check(CLI::PositiveNumber);
  solve_flags.o_max_iter =
      solve_cmd->add_option("--max-iter", solve_flags.max_iter, "outer iteration budget")
          ->check(CLI::PositiveNumber);
  solve_flags.o_seed = solve_cmd->add_option("--seed-amplitude", solve_flags.seed_amplitude,
                                             "initial-guess sinusoid amplitude, rad/s");

  Flags rollout_flags;
  std::string controls_path;
  CLI::App* rollout_cmd =
      app.add_subcommand("rollout", "replay a controls file and write its trajectory table");
  rollout_cmd->add_option("controls", controls_path, "controls file (Time,u1,u2 or two columns)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(rollout_cmd, rollout_flags);

  Flags check_flags;
  std::string traj_path;
  std::string costate_path;
  CLI::App* check_cmd =
      app.add_subcommand("check-pmp", "audit trajectory and costate files against the "
                                      "first-order optimality conditions");
  check_cmd->add_option("trajectory", traj_path, "trajectory table")
      ->required()
      ->check(CLI::ExistingFile);
  check_cmd->add_option("costates", costate_path, "costate table")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(check_cmd, check_flags);
  check_flags.o_tol =
      check_cmd->add_option("--tol", check_flags.tol, "residual tolerance")
          ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag misuse is a configuration error
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_flags);
    if (rollout_cmd->parsed()) return cmd_rollout(controls_path, rollout_flags);
    return cmd_check_pmp(traj_path, costate_path, check_flags);
  } catch (const purcell::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const purcell::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const purcell::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
