#pragma once

#include <span>
#include <vector>

#include "purcell/se2.hpp"
#include "purcell/swimmer.hpp"

namespace purcell::kernels {

enum class Exec { serial, parallel };

// Per-step quantities for rollout, gradient sweeps, and residual checks,
// all functions of (alpha_k, u_k) alone; batches across k are data-parallel.
// The sequential scans (shape, group product, costate recursions) stay
// outside this module.
struct StepPack {
  ShapeState alpha;
  Eigen::Matrix<double, 3, 2> A;
  Eigen::Vector3d dA_u[2];     // (dA/dalpha_i) * u
  se2::AlgebraVector X;        // -h * A * u
  se2::GroupElement E;         // exp(X)
  Eigen::Matrix3d dexpT;       // dexp_matrix(X)^T
  Eigen::Matrix3d transportT;  // Ad_matrix(inverse(E))^T, backward costate transport
};

// alpha_{k+1} = alpha_k + h u_k; returns u.size()+1 entries.
std::vector<ShapeState> shape_scan(const ShapeState& alpha0, std::span<const ControlVector> u,
                                   double h);

// Fills out[k] from (alphas[k], u[k]). Requires alphas.size() >= u.size() and
// out.size() == u.size(). Derivative fields (dA_u, dexpT, transportT) are
// filled only when with_derivatives is set. Both Exec variants route every
// step through one shared worker, so their outputs are bitwise identical.
// Throws ShapeOutOfDomainError naming the first offending step.
void build_step_packs(const SwimmerGeometry& geom, std::span<const ShapeState> alphas,
                      std::span<const ControlVector> u, double h, bool with_derivatives,
                      std::span<StepPack> out, Exec exec);

}  // namespace purcell::kernels
