#pragma once

#include <Eigen/Core>
#include <array>

#include "purcell/errors.hpp"
#include "purcell/se2.hpp"

namespace purcell {

// Three slender links, base link in the middle. Drag coefficients are per
// unit length; the classical slender-body closure uses drag_normal equal to
// twice drag_tangential.
struct SwimmerGeometry {
  double len0 = 1.0;
  double len1 = 1.0;
  double len2 = 1.0;
  double drag_tangential = 1.0;
  double drag_normal = 2.0;
};

// Joint angles, radians. The model is valid on (-pi, pi)^2; alpha = (0,0) is
// the straight configuration and positive angles turn both outer links
// counterclockwise in the body frame.
struct ShapeState {
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  ShapeState() = default;
  ShapeState(double a1, double a2) : alpha1(a1), alpha2(a2) {}
  explicit ShapeState(const Eigen::Vector2d& v) : alpha1(v[0]), alpha2(v[1]) {}
  Eigen::Vector2d vec() const { return {alpha1, alpha2}; }
};

// Joint rates, radians per second.
using ControlVector = Eigen::Vector2d;

// Total viscous wrench on the swimmer is -(omega_g * xi + omega_alpha * u)
// for body velocity xi and shape rates u, rows ordered (fx, fy, torque).
struct DragAssembly {
  Eigen::Matrix3d omega_g;
  Eigen::Matrix<double, 3, 2> omega_alpha;
};

struct ConnectionEval {
  // Local connection: the force-free body velocity is xi = -A(alpha) u.
  Eigen::Matrix<double, 3, 2> A;
  // dA[i] is the partial derivative with respect to alpha_{i+1}.
  std::array<Eigen::Matrix<double, 3, 2>, 2> dA;
};

inline bool shape_in_domain(const ShapeState& s) {
  constexpr double kPi = 3.14159265358979323846;
  return std::abs(s.alpha1) < kPi && std::abs(s.alpha2) < kPi;
}

// Poses of (base, outer link 1, outer link 2), each at the link midpoint with
// x-axis along the link. Base frame is the body frame itself; joint 1 sits at
// the +x end of the base, joint 2 at the -x end.
std::array<se2::GroupElement, 3> link_frames(const SwimmerGeometry& geom, const ShapeState& alpha);

// Closed-form resistive-force integrals (exact; element velocities are affine
// in arclength, so every integrand is polynomial).
DragAssembly drag_assembly(const SwimmerGeometry& geom, const ShapeState& alpha);

// A = omega_g^-1 omega_alpha and its analytic shape Jacobian
// dA_i = omega_g^-1 (d omega_alpha_i - d omega_g_i A).
// with_derivatives=false skips dA (left zero) for value-only evaluations.
// Throws ShapeOutOfDomainError outside (-pi, pi)^2.
ConnectionEval connection(const SwimmerGeometry& geom, const ShapeState& alpha,
                          bool with_derivatives = true);

// Central finite differences of A (step 1e-6) against the analytic Jacobian;
// returns the worst per-entry relative discrepancy.
double connection_jacobian_check(const SwimmerGeometry& geom, const ShapeState& alpha);

}  // namespace purcell
