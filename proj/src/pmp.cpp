#include "purcell/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "purcell/errors.hpp"
#include "purcell/kernels.hpp"

namespace purcell {

namespace {

constexpr int kFixedPointMaxIters = 50;
constexpr double kFixedPointTol = 1e-12;

double pose_gap(const se2::GroupElement& a, const se2::GroupElement& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.theta - b.theta)});
}

Eigen::Vector2d control_gradient(const Eigen::Vector3d& zeta, const Eigen::Vector2d& xi,
                                 const Eigen::Matrix<double, 3, 2>& A, const ControlVector& u,
                                 double nu, double h) {
  return h * nu * u - h * (A.transpose() * zeta) + h * xi;
}

}  // namespace

double hamiltonian(const se2::AlgebraCovector& zeta, const Eigen::Vector2d& xi,
                   const ShapeState& alpha, const ControlVector& u, double nu, double h,
                   const SwimmerGeometry& geom) {
  const ConnectionEval conn = connection(geom, alpha, false);
  return 0.5 * h * nu * u.squaredNorm() - h * zeta.vec().dot(conn.A * u) +
         xi.dot(alpha.vec() + h * u);
}

ControlVector optimal_control(const se2::AlgebraCovector& zeta, const Eigen::Vector2d& xi,
                              const ShapeState& alpha, const SwimmerGeometry& geom) {
  const ConnectionEval conn = connection(geom, alpha, false);
  return xi - conn.A.transpose() * zeta.vec();
}

se2::AlgebraCovector adjoint_step_rho_backward(const se2::AlgebraCovector& rho_k,
                                               const ShapeState& alpha_k, const ControlVector& u_k,
                                               double h, const SwimmerGeometry& geom) {
  const ConnectionEval conn = connection(geom, alpha_k, false);
  const se2::AlgebraVector X(Eigen::Vector3d(-h * (conn.A * u_k)));
  return se2::coAd(se2::inverse(se2::exp(X)), rho_k);
}

Eigen::Vector2d adjoint_step_xi_backward(const Eigen::Vector2d& xi_k,
                                         const se2::AlgebraCovector& zeta_k,
                                         const ShapeState& alpha_k, const ControlVector& u_k,
                                         double h, const SwimmerGeometry& geom) {
  const ConnectionEval conn = connection(geom, alpha_k, true);
  const Eigen::Vector3d z = zeta_k.vec();
  return xi_k - h * Eigen::Vector2d(z.dot(conn.dA[0] * u_k), z.dot(conn.dA[1] * u_k));
}

ZetaSolve zeta_from_rho(const se2::AlgebraCovector& rho_k, const Eigen::Vector2d& xi_k,
                        const ShapeState& alpha_k, double h, const SwimmerGeometry& geom) {
  const ConnectionEval conn = connection(geom, alpha_k, false);
  const Eigen::Vector3d rho = rho_k.vec();
  Eigen::Vector3d zeta = rho;
  for (int it = 1; it <= kFixedPointMaxIters; ++it) {
    const ControlVector u = xi_k - conn.A.transpose() * zeta;
    const se2::AlgebraVector X(Eigen::Vector3d(-h * (conn.A * u)));
    const Eigen::Vector3d next = se2::dlog_star_inv(X, rho_k).vec();
    if ((next - zeta).norm() <= kFixedPointTol) {
      const ControlVector u_final = xi_k - conn.A.transpose() * next;
      return {se2::AlgebraCovector(next), u_final, it};
    }
    zeta = next;
  }
  throw FixedPointDivergedError("zeta_from_rho: no contraction after 50 iterations (h too large)");
}

Extremal propagate_extremal(const SwimmerGeometry& geom, const se2::GroupElement& g0,
                            const ShapeState& alpha0, const se2::AlgebraCovector& rho0,
                            const Eigen::Vector2d& xi0, const DiscretizationParams& params) {
  if (params.h <= 0.0 || params.steps < 1) {
    throw Error("propagate_extremal: need h > 0 and steps >= 1");
  }
  const double h = params.h;
  const int N = params.steps;

  Extremal out;
  out.nu = -1.0;
  out.trajectory.h = h;
  out.trajectory.alphas.reserve(N + 1);
  out.trajectory.poses.reserve(N + 1);
  out.trajectory.controls.reserve(N);
  out.costates.reserve(N);
  out.trajectory.alphas.push_back(alpha0);
  out.trajectory.poses.push_back(g0);

  // Step 0: rho^0 and xi^0 are data; only the zeta/u coupling is implicit.
  {
    const ZetaSolve zs = zeta_from_rho(rho0, xi0, alpha0, h, geom);
    out.costates.push_back({zs.zeta, rho0, xi0});
    out.trajectory.controls.push_back(zs.u);
  }

  for (int k = 0; k < N; ++k) {
    // Advance the state with the settled control of step k.
    const ShapeState& a = out.trajectory.alphas.back();
    const ControlVector& u = out.trajectory.controls.back();
    const ConnectionEval conn = connection(geom, a, false);
    const se2::AlgebraVector X(Eigen::Vector3d(-h * (conn.A * u)));
    out.trajectory.poses.push_back(se2::compose(out.trajectory.poses.back(), se2::exp(X)));
    out.trajectory.alphas.push_back(ShapeState{a.alpha1 + h * u(0), a.alpha2 + h * u(1)});
    if (k == N - 1) break;

    // Joint fixed point at step k+1: the recursions couple (u, zeta, rho, xi)
    // through X = -h A u.
    const Costate& prev = out.costates.back();
    const ShapeState& a1 = out.trajectory.alphas.back();
    const ConnectionEval c1 = connection(geom, a1, true);
    Eigen::Vector3d zeta = prev.rho.vec();
    ControlVector u1 = prev.xi - c1.A.transpose() * zeta;
    se2::AlgebraCovector rho1(Eigen::Vector3d::Zero());
    Eigen::Vector2d xi1 = prev.xi;
    bool converged = false;
    for (int it = 0; it < kFixedPointMaxIters; ++it) {
      const se2::AlgebraVector X1(Eigen::Vector3d(-h * (c1.A * u1)));
      rho1 = se2::coAd(se2::exp(X1), prev.rho);
      const Eigen::Vector3d zeta_next = se2::dlog_star_inv(X1, rho1).vec();
      xi1 = prev.xi + h * Eigen::Vector2d(zeta_next.dot(c1.dA[0] * u1),
                                          zeta_next.dot(c1.dA[1] * u1));
      const ControlVector u_next = c1.A.transpose() * (-zeta_next) + xi1;
      const double gap = std::max((zeta_next - zeta).norm(), (u_next - u1).norm());
      zeta = zeta_next;
      u1 = u_next;
      if (gap <= kFixedPointTol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw FixedPointDivergedError("propagate_extremal: step " + std::to_string(k + 1) +
                                    " fixed point did not contract (h too large)");
    }
    out.costates.push_back({se2::AlgebraCovector(zeta), rho1, xi1});
    out.trajectory.controls.push_back(u1);
  }
  return out;
}

double ResidualReport::max_residual() const {
  return std::max({state_alpha, state_group, rho_definition, rho_recursion, xi_recursion,
                   stationarity});
}

ResidualReport pmp_residuals(const StateTrajectory& traj, std::span<const Costate> costates,
                             double nu, const SwimmerGeometry& geom) {
  const std::size_t n = traj.controls.size();
  if (costates.size() != n || traj.alphas.size() != n + 1 || traj.poses.size() != n + 1) {
    throw Error("pmp_residuals: inconsistent sequence lengths");
  }
  const double h = traj.h;
  std::vector<kernels::StepPack> packs(n);
  kernels::build_step_packs(geom, traj.alphas, traj.controls, h, true, packs,
                            kernels::Exec::serial);

  ResidualReport rep;
  rep.costate_magnitude = std::abs(nu);
  for (std::size_t k = 0; k < n; ++k) {
    const kernels::StepPack& pk = packs[k];
    const Costate& ck = costates[k];
    const ControlVector& u = traj.controls[k];

    rep.state_alpha = std::max({rep.state_alpha,
                                std::abs(traj.alphas[k + 1].alpha1 - traj.alphas[k].alpha1 -
                                         h * u(0)),
                                std::abs(traj.alphas[k + 1].alpha2 - traj.alphas[k].alpha2 -
                                         h * u(1))});
    rep.state_group = std::max(rep.state_group,
                               pose_gap(traj.poses[k + 1], se2::compose(traj.poses[k], pk.E)));
    rep.rho_definition = std::max(
        rep.rho_definition, (ck.rho.vec() - se2::dlog_star(pk.X, ck.zeta).vec()).norm());
    if (k > 0) {
      const se2::AlgebraCovector transported = se2::coAd(se2::inverse(pk.E), ck.rho);
      rep.rho_recursion =
          std::max(rep.rho_recursion, (costates[k - 1].rho.vec() - transported.vec()).norm());
      const Eigen::Vector2d xi_prev =
          ck.xi - h * Eigen::Vector2d(ck.zeta.vec().dot(pk.dA_u[0]), ck.zeta.vec().dot(pk.dA_u[1]));
      rep.xi_recursion = std::max(rep.xi_recursion, (costates[k - 1].xi - xi_prev).norm());
    }
    rep.stationarity = std::max(
        rep.stationarity, control_gradient(ck.zeta.vec(), ck.xi, pk.A, u, nu, h).norm());
    rep.costate_magnitude =
        std::max({rep.costate_magnitude, ck.zeta.vec().norm(), ck.rho.vec().norm(), ck.xi.norm()});
  }
  rep.nontrivial = rep.costate_magnitude > 0.0;
  return rep;
}

std::string format_report(const ResidualReport& report, double tol) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(3);
  auto row = [&](const char* name, double value) {
    os << name << "  " << value << "  " << (value <= tol ? "pass" : "FAIL") << "\n";
  };
  os << "condition            max residual  verdict (tol " << tol << ")\n";
  row("state (shape)      ", report.state_alpha);
  row("state (group)      ", report.state_group);
  row("rho definition     ", report.rho_definition);
  row("rho recursion      ", report.rho_recursion);
  row("xi recursion       ", report.xi_recursion);
  row("stationarity       ", report.stationarity);
  os << "non-triviality       " << report.costate_magnitude << "  "
     << (report.nontrivial ? "pass" : "FAIL") << "\n";
  return os.str();
}

namespace generic {

namespace {

Eigen::VectorXd control_gradient_generic(const System& sys, int t, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u, const Eigen::Vector3d& zeta,
                                         const Eigen::VectorXd& xi, double nu) {
  return nu * sys.dcost_du(t, x, u) + sys.dtwist_du(t, x, u).transpose() * zeta +
         sys.df_du(t, x, u).transpose() * xi;
}

}  // namespace

CheckReport check(const System& sys, std::span<const Box> boxes, const Trajectory& traj,
                  std::span<const Costate> costates, double nu) {
  const std::size_t n = traj.u.size();
  if (costates.size() != n || traj.x.size() != n + 1 || traj.q.size() != n + 1) {
    throw Error("generic check: inconsistent sequence lengths");
  }
  if (boxes.size() != 1 && boxes.size() != n) {
    throw Error("generic check: need one box or one per step");
  }
  const int m = sys.control_dim;
  for (const Box& b : boxes) {
    if (b.lo.size() != m || b.hi.size() != m || (b.lo.array() > b.hi.array()).any()) {
      throw Error("generic check: empty or mis-sized box");
    }
  }

  CheckReport rep;
  rep.costate_magnitude = std::abs(nu);
  for (std::size_t t = 0; t < n; ++t) {
    const Eigen::VectorXd& x = traj.x[t];
    const Eigen::VectorXd& u = traj.u[t];
    const Costate& ct = costates[t];
    const Box& box = boxes.size() == 1 ? boxes[0] : boxes[t];

    rep.state_x = std::max(rep.state_x, (traj.x[t + 1] - sys.f(t, x, u)).cwiseAbs().maxCoeff());
    const se2::AlgebraVector X = sys.twist(t, x, u);
    const se2::GroupElement q_next = se2::compose(traj.q[t], se2::exp(X));
    rep.state_group = std::max(rep.state_group,
                               std::max({std::abs(traj.q[t + 1].x - q_next.x),
                                         std::abs(traj.q[t + 1].y - q_next.y),
                                         std::abs(traj.q[t + 1].theta - q_next.theta)}));
    rep.rho_definition =
        std::max(rep.rho_definition, (ct.rho.vec() - se2::dlog_star(X, ct.zeta).vec()).norm());
    if (t > 0) {
      const se2::AlgebraCovector transported = se2::coAd(se2::inverse(se2::exp(X)), ct.rho);
      rep.rho_recursion =
          std::max(rep.rho_recursion, (costates[t - 1].rho.vec() - transported.vec()).norm());
      const Eigen::VectorXd xi_prev = nu * sys.dcost_dx(t, x, u) +
                                      sys.dtwist_dx(t, x, u).transpose() * ct.zeta.vec() +
                                      sys.df_dx(t, x, u).transpose() * ct.xi;
      rep.xi_recursion = std::max(rep.xi_recursion, (costates[t - 1].xi - xi_prev).norm());
    }

    const Eigen::VectorXd grad = control_gradient_generic(sys, static_cast<int>(t), x, u,
                                                          ct.zeta.vec(), ct.xi, nu);
    rep.stationarity_norm = std::max(rep.stationarity_norm, grad.norm());
    for (int i = 0; i < m; ++i) {
      rep.control_membership = std::max(
          {rep.control_membership, box.lo(i) - u(i), u(i) - box.hi(i)});
    }
    // <grad, w - u> over vertices w of the box; linear in w.
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      Eigen::VectorXd w(m);
      for (int i = 0; i < m; ++i) w(i) = (mask >> i) & 1u ? box.hi(i) : box.lo(i);
      rep.gradient_condition = std::max(rep.gradient_condition, grad.dot(w - u));
    }
    rep.costate_magnitude =
        std::max({rep.costate_magnitude, ct.zeta.vec().norm(), ct.rho.vec().norm(), ct.xi.norm()});
  }
  rep.control_membership = std::max(rep.control_membership, 0.0);
  rep.nontrivial = rep.costate_magnitude > 0.0;
  return rep;
}

System purcell_system(const SwimmerGeometry& geom, double h) {
  System sys;
  sys.state_dim = 2;
  sys.control_dim = 2;
  sys.f = [h](int, const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return x + h * u;
  };
  sys.df_dx = [](int, const Eigen::VectorXd&, const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::Matrix2d::Identity();
  };
  sys.df_du = [h](int, const Eigen::VectorXd&, const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return h * Eigen::Matrix2d::Identity();
  };
  sys.twist = [geom, h](int, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const ConnectionEval conn = connection(geom, ShapeState{x(0), x(1)}, false);
    return se2::AlgebraVector(Eigen::Vector3d(-h * (conn.A * Eigen::Vector2d(u))));
  };
  sys.dtwist_dx = [geom, h](int, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u) -> Eigen::MatrixXd {
    const ConnectionEval conn = connection(geom, ShapeState{x(0), x(1)}, true);
    Eigen::MatrixXd out(3, 2);
    out.col(0) = -h * (conn.dA[0] * Eigen::Vector2d(u));
    out.col(1) = -h * (conn.dA[1] * Eigen::Vector2d(u));
    return out;
  };
  sys.dtwist_du = [geom, h](int, const Eigen::VectorXd& x,
                            const Eigen::VectorXd&) -> Eigen::MatrixXd {
    const ConnectionEval conn = connection(geom, ShapeState{x(0), x(1)}, false);
    return -h * conn.A;
  };
  sys.cost = [h](int, const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return 0.5 * h * u.squaredNorm();
  };
  sys.dcost_dx = [](int, const Eigen::VectorXd&, const Eigen::VectorXd&) -> Eigen::VectorXd {
    return Eigen::Vector2d::Zero();
  };
  sys.dcost_du = [h](int, const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return h * u;
  };
  return sys;
}

}  // namespace generic

}  // namespace purcell
