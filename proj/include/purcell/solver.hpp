#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "purcell/pmp.hpp"

namespace purcell {

struct ProblemSpec {
  SwimmerGeometry geometry;
  DiscretizationParams params;
  ShapeState alpha_bar{0.0, 0.0};       // loop basepoint: alpha_0 = alpha_N
  se2::GroupElement g_bar = se2::identity();  // target holonomy
};

enum class SolveMethod { direct, shooting };
enum class InitialGuess { zero, seeded, file };
enum class SolveStatus { certified, max_iterations, diverged };

struct SolverConfig {
  SolveMethod method = SolveMethod::direct;
  int max_outer_iterations = 60;
  int max_inner_iterations = 2000;
  double constraint_tolerance = 1e-6;
  double stationarity_tolerance = 1e-6;
  InitialGuess initial_guess = InitialGuess::seeded;
  double seed_amplitude = 0.01;  // rad/s, two-harmonic sinusoid seed
  std::vector<ControlVector> guess_controls;  // consumed when initial_guess == file
  double penalty_initial = 10.0;
  double penalty_growth = 10.0;
  double penalty_cap = 1e12;
  double linesearch_backtrack = 0.5;
  double linesearch_decrease = 1e-4;
  // Warm start for shooting: (rho^0; xi^0). Cold start is zero.
  std::optional<Eigen::Matrix<double, 5, 1>> shooting_seed;
};

struct ConvergenceRecord {
  int iteration = 0;
  double cost = 0.0;
  double constraint_norm = 0.0;
  double stationarity = 0.0;
  double penalty = 0.0;
  int inner_iterations = 0;
};

struct Solution {
  StateTrajectory trajectory;
  std::vector<Costate> costates;
  double nu = -1.0;
  double cost = 0.0;
  Eigen::Matrix<double, 5, 1> terminal = Eigen::Matrix<double, 5, 1>::Zero();
  ResidualReport residuals;
  std::vector<ConvergenceRecord> log;
  SolveStatus status = SolveStatus::diverged;
  std::string message;
};

// (alpha_N - alpha_bar; log(inverse(g_bar) o holonomy)): zero iff the
// boundary conditions hold. Throws InjectivityRadiusError when the pose
// mismatch leaves the log domain (a diverged iterate).
Eigen::Matrix<double, 5, 1> terminal_residual(const StateTrajectory& traj,
                                              const ProblemSpec& spec);

// Augmented objective cost + <multipliers, r> + (penalty/2)|r|^2 and its exact
// gradient over all controls (one backward adjoint sweep). Gradient layout:
// (u_0(0), u_0(1), u_1(0), ...).
std::pair<double, Eigen::VectorXd> objective_and_gradient(
    std::span<const ControlVector> controls, const ProblemSpec& spec,
    const Eigen::Matrix<double, 5, 1>& multipliers, double penalty);

// Value-only variant (skips all derivative work; used by line searches).
double objective_value(std::span<const ControlVector> controls, const ProblemSpec& spec,
                       const Eigen::Matrix<double, 5, 1>& multipliers, double penalty);

// Augmented-Lagrangian outer loop over limited-memory quasi-Newton inner
// minimization; recovers costates from the final multipliers and re-checks
// them with pmp_residuals before returning.
Solution solve_direct(const ProblemSpec& spec, const SolverConfig& config);

// Damped Newton on the 5-dimensional map (rho^0, xi^0) -> terminal residual
// of the forward-propagated extremal; central-difference Jacobian. Without an
// explicit shooting_seed, nontrivial targets are warm-started from a direct
// pre-solve (a cold start has no first-order visibility of translation
// targets at the straight shape).
Solution solve_shooting(const ProblemSpec& spec, const SolverConfig& config);

// Dispatch on config.method.
Solution solve(const ProblemSpec& spec, const SolverConfig& config);

struct VerifyReport {
  double rollout_residual = 0.0;  // stored states vs re-derived steps
  double terminal_norm = 0.0;
  double cost = 0.0;
  ResidualReport pmp;
  bool shape_in_bounds = false;
  bool certified = false;
};

// Re-rolls the trajectory from its controls (the source of truth) and
// re-checks every certificate.
VerifyReport verify(const Solution& solution, const ProblemSpec& spec,
                    double constraint_tol = 1e-6, double stationarity_tol = 1e-6);

std::string format_log(std::span<const ConvergenceRecord> log);

}  // namespace purcell
