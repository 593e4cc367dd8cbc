#pragma once

#include <Eigen/Core>

#include "purcell/errors.hpp"

namespace purcell::se2 {

// Planar rigid transform stored as (x, y, theta). theta lives in all of R so
// trajectories stay continuous; only log() canonicalizes into (-pi, pi].
struct GroupElement {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// se(2) element in the fixed basis ordering (vx, vy, omega).
struct AlgebraVector {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  AlgebraVector() = default;
  AlgebraVector(double vx_, double vy_, double omega_) : vx(vx_), vy(vy_), omega(omega_) {}
  explicit AlgebraVector(const Eigen::Vector3d& v) : vx(v[0]), vy(v[1]), omega(v[2]) {}
  Eigen::Vector3d vec() const { return {vx, vy, omega}; }
};

// Dual element; pairing with AlgebraVector is the plain dot product
// fx*vx + fy*vy + tau*omega.
struct AlgebraCovector {
  double fx = 0.0;
  double fy = 0.0;
  double tau = 0.0;

  AlgebraCovector() = default;
  AlgebraCovector(double fx_, double fy_, double tau_) : fx(fx_), fy(fy_), tau(tau_) {}
  explicit AlgebraCovector(const Eigen::Vector3d& v) : fx(v[0]), fy(v[1]), tau(v[2]) {}
  Eigen::Vector3d vec() const { return {fx, fy, tau}; }
};

inline GroupElement identity() { return {}; }

GroupElement compose(const GroupElement& g1, const GroupElement& g2);
GroupElement inverse(const GroupElement& g);

// Homogeneous 3x3 matrix of g; rotation block built directly from theta.
Eigen::Matrix3d homogeneous(const GroupElement& g);

// Representative of theta in (-pi, pi].
double canonical_angle(double theta);

double pairing(const AlgebraCovector& a, const AlgebraVector& v);

// Closed-form exponential; the omega -> 0 limit is a pure translation.
GroupElement exp(const AlgebraVector& X);

// Inverse of exp on the canonical angle sheet. Throws InjectivityRadiusError
// once |canonical theta| >= pi - eps_theta.
AlgebraVector log(const GroupElement& g, double eps_theta = 1e-9);

// Generator matrix with exp(hat(X)) = homogeneous(exp(X)); unhat inverts it.
Eigen::Matrix3d hat(const AlgebraVector& X);
AlgebraVector unhat(const Eigen::Matrix3d& m);

// Matrix of ad_X in the fixed basis.
Eigen::Matrix3d ad_matrix(const AlgebraVector& X);

// Matrix of Ad_g: column j is d/ds|0 of g exp(s e_j) g^-1.
Eigen::Matrix3d Ad_matrix(const GroupElement& g);

AlgebraVector Ad(const GroupElement& g, const AlgebraVector& X);

// Plain dual map of Ad: <coAd(g, a), X> = <a, Ad(g, X)>, i.e. Ad_matrix(g)^T.
AlgebraCovector coAd(const GroupElement& g, const AlgebraCovector& a);

// M(X) with d/ds|0 log(exp(X) exp(s eta)) = M(X) eta (body-frame increment).
// Closed form: I + ad/2 + gamma(omega) ad^2, using ad^3 = -omega^2 ad.
Eigen::Matrix3d dlog_matrix(const AlgebraVector& X);

// Exact inverse of dlog_matrix: I + b(omega) ad + c(omega) ad^2.
Eigen::Matrix3d dexp_matrix(const AlgebraVector& X);

// rho = M(X)^T zeta. Throws InjectivityRadiusError when |omega| >= pi - 1e-9.
AlgebraCovector dlog_star(const AlgebraVector& X, const AlgebraCovector& zeta);

// zeta with dlog_star(X, zeta) = rho, via the closed-form inverse.
AlgebraCovector dlog_star_inv(const AlgebraVector& X, const AlgebraCovector& rho);

}  // namespace purcell::se2
