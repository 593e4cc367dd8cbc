#include "purcell/se2.hpp"

#include <cmath>
#include <sstream>

namespace purcell::se2 {

namespace {

// Series switch points. The exp/log scalar ratios are stable outside a tiny
// neighborhood of zero; the dlog/dexp coefficients gamma, b, c cancel like
// eps/omega^2 when formed directly, so they switch much earlier.
constexpr double kTinyAngle = 1e-4;
constexpr double kCancelAngle = 1e-2;
constexpr double kInjectivityMargin = 1e-9;
constexpr double kPi = 3.14159265358979323846;

// sin(w)/w
double sinc(double w) {
  if (std::abs(w) < kTinyAngle) {
    const double w2 = w * w;
    return 1.0 - w2 / 6.0 + w2 * w2 / 120.0;
  }
  return std::sin(w) / w;
}

// (1 - cos(w))/w, via 2 sin^2(w/2)/w which does not cancel.
double verc(double w) {
  if (std::abs(w) < kTinyAngle) {
    const double w2 = w * w;
    return w * (0.5 - w2 / 24.0 + w2 * w2 / 720.0);
  }
  const double s = std::sin(0.5 * w);
  return 2.0 * s * s / w;
}

// (w/2) cot(w/2)
double half_cot_half(double w) {
  if (std::abs(w) < kTinyAngle) {
    const double w2 = w * w;
    return 1.0 - w2 / 12.0 - w2 * w2 / 720.0;
  }
  return (0.5 * w) / std::tan(0.5 * w);
}

// gamma(w) = (1 - (w/2)cot(w/2)) / w^2, the ad^2 coefficient of dlog.
double dlog_gamma(double w) {
  const double w2 = w * w;
  if (std::abs(w) < kCancelAngle) {
    return 1.0 / 12.0 + w2 / 720.0 + w2 * w2 / 30240.0 + w2 * w2 * w2 / 1209600.0;
  }
  return (1.0 - half_cot_half(w)) / w2;
}

// b(w) = -(1 - cos w)/w^2, the ad coefficient of dexp.
double dexp_b(double w) {
  const double w2 = w * w;
  if (std::abs(w) < kCancelAngle) {
    return -0.5 + w2 / 24.0 - w2 * w2 / 720.0 + w2 * w2 * w2 / 40320.0;
  }
  const double s = std::sin(0.5 * w);
  return -2.0 * s * s / w2;
}

// c(w) = (w - sin w)/w^3, the ad^2 coefficient of dexp.
double dexp_c(double w) {
  const double w2 = w * w;
  if (std::abs(w) < kCancelAngle) {
    return 1.0 / 6.0 - w2 / 120.0 + w2 * w2 / 5040.0 - w2 * w2 * w2 / 362880.0;
  }
  return (w - std::sin(w)) / (w2 * w);
}

void require_inside_injectivity(double w, const char* who) {
  if (std::abs(w) >= kPi - kInjectivityMargin) {
    std::ostringstream msg;
    msg << who << ": angle " << w << " is outside the injectivity radius";
    throw InjectivityRadiusError(msg.str());
  }
}

}  // namespace

GroupElement compose(const GroupElement& g1, const GroupElement& g2) {
  const double c = std::cos(g1.theta);
  const double s = std::sin(g1.theta);
  return {g1.x + c * g2.x - s * g2.y, g1.y + s * g2.x + c * g2.y, g1.theta + g2.theta};
}

GroupElement inverse(const GroupElement& g) {
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  return {-(c * g.x + s * g.y), s * g.x - c * g.y, -g.theta};
}

Eigen::Matrix3d homogeneous(const GroupElement& g) {
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  Eigen::Matrix3d m;
  m << c, -s, g.x, s, c, g.y, 0.0, 0.0, 1.0;
  return m;
}

double canonical_angle(double theta) {
  double r = std::remainder(theta, 2.0 * kPi);
  if (r <= -kPi) r = kPi;
  return r;
}

double pairing(const AlgebraCovector& a, const AlgebraVector& v) {
  return a.fx * v.vx + a.fy * v.vy + a.tau * v.omega;
}

GroupElement exp(const AlgebraVector& X) {
  const double s1 = sinc(X.omega);
  const double s2 = verc(X.omega);
  return {s1 * X.vx - s2 * X.vy, s2 * X.vx + s1 * X.vy, X.omega};
}

AlgebraVector log(const GroupElement& g, double eps_theta) {
  const double th = canonical_angle(g.theta);
  if (std::abs(th) >= kPi - eps_theta) {
    std::ostringstream msg;
    msg << "log: canonical angle " << th << " within " << eps_theta << " of the injectivity radius";
    throw InjectivityRadiusError(msg.str());
  }
  const double a = half_cot_half(th);
  const double ht = 0.5 * th;
  return {a * g.x + ht * g.y, -ht * g.x + a * g.y, th};
}

Eigen::Matrix3d hat(const AlgebraVector& X) {
  Eigen::Matrix3d m;
  m << 0.0, -X.omega, X.vx, X.omega, 0.0, X.vy, 0.0, 0.0, 0.0;
  return m;
}

AlgebraVector unhat(const Eigen::Matrix3d& m) { return {m(0, 2), m(1, 2), m(1, 0)}; }

Eigen::Matrix3d ad_matrix(const AlgebraVector& X) {
  Eigen::Matrix3d m;
  m << 0.0, -X.omega, X.vy, X.omega, 0.0, -X.vx, 0.0, 0.0, 0.0;
  return m;
}

Eigen::Matrix3d Ad_matrix(const GroupElement& g) {
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  Eigen::Matrix3d m;
  m << c, -s, g.y, s, c, -g.x, 0.0, 0.0, 1.0;
  return m;
}

AlgebraVector Ad(const GroupElement& g, const AlgebraVector& X) {
  return AlgebraVector(Ad_matrix(g) * X.vec());
}

AlgebraCovector coAd(const GroupElement& g, const AlgebraCovector& a) {
  return AlgebraCovector(Ad_matrix(g).transpose() * a.vec());
}

Eigen::Matrix3d dlog_matrix(const AlgebraVector& X) {
  require_inside_injectivity(X.omega, "dlog");
  const Eigen::Matrix3d ad = ad_matrix(X);
  return Eigen::Matrix3d::Identity() + 0.5 * ad + dlog_gamma(X.omega) * (ad * ad);
}

Eigen::Matrix3d dexp_matrix(const AlgebraVector& X) {
  const Eigen::Matrix3d ad = ad_matrix(X);
  return Eigen::Matrix3d::Identity() + dexp_b(X.omega) * ad + dexp_c(X.omega) * (ad * ad);
}

AlgebraCovector dlog_star(const AlgebraVector& X, const AlgebraCovector& zeta) {
  return AlgebraCovector(dlog_matrix(X).transpose() * zeta.vec());
}

AlgebraCovector dlog_star_inv(const AlgebraVector& X, const AlgebraCovector& rho) {
  require_inside_injectivity(X.omega, "dlog_star_inv");
  const Eigen::Vector3d z = dexp_matrix(X).transpose() * rho.vec();
  if (!z.allFinite()) {
    throw SingularError("dlog_star_inv: non-finite result, inputs corrupted");
  }
  return AlgebraCovector(z);
}

}  // namespace purcell::se2
