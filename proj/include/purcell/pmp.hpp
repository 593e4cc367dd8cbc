#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "purcell/integrator.hpp"
#include "purcell/se2.hpp"
#include "purcell/swimmer.hpp"

namespace purcell {

// Adjoint variables attached to step k. rho is the trivialized group costate:
// rho = dlog_star(X_k, zeta) with X_k = -h A(alpha_k) u_k (re-verifiable).
struct Costate {
  se2::AlgebraCovector zeta;
  se2::AlgebraCovector rho;
  Eigen::Vector2d xi;
};

// nu = -1 is the normal case; nu = 0 is admitted only by the checkers and
// then some costate must be nonzero.
struct Extremal {
  StateTrajectory trajectory;
  std::vector<Costate> costates;  // one per step, k = 0..N-1
  double nu = -1.0;
};

// H = (h nu / 2)<u,u> - h <zeta, A(alpha) u> + <xi, alpha + h u>.
// Constant in g by left invariance, so g is not an argument.
double hamiltonian(const se2::AlgebraCovector& zeta, const Eigen::Vector2d& xi,
                   const ShapeState& alpha, const ControlVector& u, double nu, double h,
                   const SwimmerGeometry& geom);

// Stationary point of H in u for nu = -1: u = xi - A(alpha)^T zeta.
ControlVector optimal_control(const se2::AlgebraCovector& zeta, const Eigen::Vector2d& xi,
                              const ShapeState& alpha, const SwimmerGeometry& geom);

// rho^{k-1} = coAd(inverse(exp(-h A(alpha_k) u_k)), rho^k): coadjoint
// transport along the actual discrete step.
se2::AlgebraCovector adjoint_step_rho_backward(const se2::AlgebraCovector& rho_k,
                                               const ShapeState& alpha_k, const ControlVector& u_k,
                                               double h, const SwimmerGeometry& geom);

// xi^{k-1}_i = xi^k_i - h <zeta^k, (dA/dalpha_i)(alpha_k) u_k>.
Eigen::Vector2d adjoint_step_xi_backward(const Eigen::Vector2d& xi_k,
                                         const se2::AlgebraCovector& zeta_k,
                                         const ShapeState& alpha_k, const ControlVector& u_k,
                                         double h, const SwimmerGeometry& geom);

struct ZetaSolve {
  se2::AlgebraCovector zeta;
  ControlVector u;
  int iterations = 0;
};

// Solves the coupled fixed point zeta = dlog_star_inv(X(u), rho),
// u = xi - A^T zeta, X(u) = -h A(alpha) u, seeded with zeta = rho.
// Throws FixedPointDivergedError after 50 iterations (h too large).
ZetaSolve zeta_from_rho(const se2::AlgebraCovector& rho_k, const Eigen::Vector2d& xi_k,
                        const ShapeState& alpha_k, double h, const SwimmerGeometry& geom);

// Forward propagation of the full extremal system from (rho^0, xi^0): each
// step solves the joint fixed point over (u, zeta, rho, xi) implied by the
// stationarity condition and both adjoint recursions, then advances the state.
Extremal propagate_extremal(const SwimmerGeometry& geom, const se2::GroupElement& g0,
                            const ShapeState& alpha0, const se2::AlgebraCovector& rho0,
                            const Eigen::Vector2d& xi0, const DiscretizationParams& params);

// Max norms of the extremality conditions over the trajectory.
struct ResidualReport {
  double state_alpha = 0.0;     // |alpha_{k+1} - alpha_k - h u_k|
  double state_group = 0.0;     // g_{k+1} vs g_k exp(-h A u)
  double rho_definition = 0.0;  // rho^k vs dlog_star(X_k, zeta^k)
  double rho_recursion = 0.0;   // rho^{k-1} vs coadjoint transport of rho^k
  double xi_recursion = 0.0;    // xi^{k-1} vs shape-adjoint step of xi^k
  double stationarity = 0.0;    // |D_u H|
  double costate_magnitude = 0.0;  // max over all |zeta|, |rho|, |xi|, |nu|
  bool nontrivial = false;         // costate_magnitude > 0

  double max_residual() const;
  bool pass(double tol) const { return max_residual() <= tol && nontrivial; }
};

ResidualReport pmp_residuals(const StateTrajectory& traj, std::span<const Costate> costates,
                             double nu, const SwimmerGeometry& geom);

// Plain-text table: condition, max residual, pass/fail at tol.
std::string format_report(const ResidualReport& report, double tol);

namespace generic {

// Discrete system on R^n x SE(2): x_{t+1} = f(t, x_t, u_t),
// q_{t+1} = q_t exp(twist(t, x_t, u_t)), stage cost c(t, x_t, u_t).
// Jacobian callbacks: df_dx n x n, df_du n x m, dtwist_dx 3 x n,
// dtwist_du 3 x m, dcost_* gradients.
struct System {
  int state_dim = 0;
  int control_dim = 0;
  using VecFn = std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
  using MatFn = std::function<Eigen::MatrixXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
  using TwistFn =
      std::function<se2::AlgebraVector(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
  using ScalarFn = std::function<double(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
  VecFn f;
  MatFn df_dx;
  MatFn df_du;
  TwistFn twist;
  MatFn dtwist_dx;
  MatFn dtwist_du;
  ScalarFn cost;
  VecFn dcost_dx;
  VecFn dcost_du;
};

// Axis-aligned control constraint set; lo <= hi componentwise.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> x;        // N+1
  std::vector<se2::GroupElement> q;      // N+1
  std::vector<Eigen::VectorXd> u;        // N
};

struct Costate {
  se2::AlgebraCovector zeta;
  se2::AlgebraCovector rho;
  Eigen::VectorXd xi;
};

struct CheckReport {
  double state_x = 0.0;
  double state_group = 0.0;
  double rho_definition = 0.0;
  double rho_recursion = 0.0;
  double xi_recursion = 0.0;
  // max over steps and box vertices of <D_u H, w - u_t>; the condition holds
  // when this is <= tol. Linear in w, so vertices suffice.
  double gradient_condition = 0.0;
  double stationarity_norm = 0.0;  // max |D_u H|, interior diagnostic
  double control_membership = 0.0;  // max componentwise violation of u_t in U_t
  double costate_magnitude = 0.0;
  bool nontrivial = false;
};

// boxes: one per step, or a single box applied to every step.
CheckReport check(const System& sys, std::span<const Box> boxes, const Trajectory& traj,
                  std::span<const Costate> costates, double nu);

// The swimmer instance as a generic system (analytic derivatives).
System purcell_system(const SwimmerGeometry& geom, double h);

}  // namespace generic

}  // namespace purcell
