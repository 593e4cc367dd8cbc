#include "purcell/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "purcell/errors.hpp"

namespace purcell {

std::pair<se2::GroupElement, ShapeState> step(const SwimmerGeometry& geom,
                                              const se2::GroupElement& g, const ShapeState& alpha,
                                              const ControlVector& u, double h) {
  const ConnectionEval conn = connection(geom, alpha, false);
  const se2::AlgebraVector X(Eigen::Vector3d(-h * (conn.A * u)));
  return {se2::compose(g, se2::exp(X)), ShapeState{alpha.alpha1 + h * u(0), alpha.alpha2 + h * u(1)}};
}

StateTrajectory rollout(const SwimmerGeometry& geom, const se2::GroupElement& g0,
                        const ShapeState& alpha0, std::span<const ControlVector> controls,
                        const DiscretizationParams& params, kernels::Exec exec) {
  if (params.h <= 0.0 || params.steps < 1) {
    throw Error("rollout: need h > 0 and steps >= 1");
  }
  if (static_cast<int>(controls.size()) != params.steps) {
    throw Error("rollout: expected " + std::to_string(params.steps) + " controls, got " +
                std::to_string(controls.size()));
  }
  StateTrajectory traj;
  traj.h = params.h;
  traj.controls.assign(controls.begin(), controls.end());
  traj.alphas = kernels::shape_scan(alpha0, controls, params.h);

  std::vector<kernels::StepPack> packs(controls.size());
  kernels::build_step_packs(geom, traj.alphas, controls, params.h, false, packs, exec);

  traj.poses.reserve(controls.size() + 1);
  traj.poses.push_back(g0);
  for (const kernels::StepPack& pack : packs) {
    traj.poses.push_back(se2::compose(traj.poses.back(), pack.E));
  }
  return traj;
}

se2::GroupElement holonomy(const StateTrajectory& traj) {
  if (traj.poses.empty()) throw Error("holonomy: empty trajectory");
  return se2::compose(se2::inverse(traj.poses.front()), traj.poses.back());
}

double cost(std::span<const ControlVector> controls, double h) {
  double acc = 0.0;
  for (const ControlVector& u : controls) acc += u.squaredNorm();
  return 0.5 * h * acc;
}

double verify_rollout(const SwimmerGeometry& geom, const StateTrajectory& traj) {
  const std::size_t n = traj.controls.size();
  if (traj.alphas.size() != n + 1 || traj.poses.size() != n + 1) {
    throw Error("verify_rollout: inconsistent trajectory sizes");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto [g_next, a_next] = step(geom, traj.poses[k], traj.alphas[k], traj.controls[k], traj.h);
    worst = std::max(worst, std::abs(a_next.alpha1 - traj.alphas[k + 1].alpha1));
    worst = std::max(worst, std::abs(a_next.alpha2 - traj.alphas[k + 1].alpha2));
    worst = std::max(worst, std::abs(g_next.x - traj.poses[k + 1].x));
    worst = std::max(worst, std::abs(g_next.y - traj.poses[k + 1].y));
    worst = std::max(worst, std::abs(g_next.theta - traj.poses[k + 1].theta));
  }
  return worst;
}

}  // namespace purcell
