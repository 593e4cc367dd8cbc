#pragma once

#include <span>
#include <utility>
#include <vector>

#include "purcell/kernels.hpp"
#include "purcell/se2.hpp"
#include "purcell/swimmer.hpp"

namespace purcell {

struct DiscretizationParams {
  double h = 0.01;
  int steps = 10000;  // N; horizon T = h * steps
};

// Dense trajectory: alphas and poses hold N+1 entries, controls N.
struct StateTrajectory {
  double h = 0.0;
  std::vector<ShapeState> alphas;
  std::vector<se2::GroupElement> poses;
  std::vector<ControlVector> controls;

  int steps() const { return static_cast<int>(controls.size()); }
};

// One step of the group-exponential update: alpha+ = alpha + h u,
// g+ = g o exp(-h A(alpha) u). g+ is on SE(2) by construction.
std::pair<se2::GroupElement, ShapeState> step(const SwimmerGeometry& geom,
                                              const se2::GroupElement& g, const ShapeState& alpha,
                                              const ControlVector& u, double h);

StateTrajectory rollout(const SwimmerGeometry& geom, const se2::GroupElement& g0,
                        const ShapeState& alpha0, std::span<const ControlVector> controls,
                        const DiscretizationParams& params,
                        kernels::Exec exec = kernels::Exec::serial);

// inverse(g_0) o g_N; independent of g_0.
se2::GroupElement holonomy(const StateTrajectory& traj);

// sum_k (h/2) |u_k|^2
double cost(std::span<const ControlVector> controls, double h);

// Max step-equation residual over the trajectory (states recomputed from the
// stored controls); fresh rollouts satisfy this at machine precision.
double verify_rollout(const SwimmerGeometry& geom, const StateTrajectory& traj);

}  // namespace purcell
