#include "purcell/swimmer.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

namespace purcell {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

// One straight link. Midpoint m, unit tangent t; outer links hang off a joint
// at m - joint_sign*(len/2)*t and rotate with their own joint angle.
struct Link {
  double len = 0.0;
  Eigen::Vector2d t;
  Eigen::Vector2d m;
  double joint_sign = 0.0;  // 0 for the base link
  int joint = -1;           // 0 or 1 for the outer links
};

std::array<Link, 3> make_links(const SwimmerGeometry& g, const ShapeState& a) {
  std::array<Link, 3> L;
  L[0] = {g.len0, {1.0, 0.0}, {0.0, 0.0}, 0.0, -1};
  const Eigen::Vector2d t1{std::cos(a.alpha1), std::sin(a.alpha1)};
  const Eigen::Vector2d t2{std::cos(a.alpha2), std::sin(a.alpha2)};
  L[1] = {g.len1, t1, Eigen::Vector2d(0.5 * g.len0, 0.0) + 0.5 * g.len1 * t1, 1.0, 0};
  L[2] = {g.len2, t2, Eigen::Vector2d(-0.5 * g.len0, 0.0) - 0.5 * g.len2 * t2, -1.0, 1};
  return L;
}

// Resistance columns of one link for inputs (vx, vy, omega, u1, u2), plus the
// derivative with respect to the link's own joint angle. The element at
// arclength s from the midpoint moves with w(s) = w0 + s*w1, and the column
// is (len*D*w0 ; len*m x D*w0 + len^3/12 * t x D*w1) with D the local drag.
struct LinkColumns {
  Eigen::Matrix<double, 3, 5> R = Eigen::Matrix<double, 3, 5>::Zero();
  Eigen::Matrix<double, 3, 5> dR = Eigen::Matrix<double, 3, 5>::Zero();
};

LinkColumns link_columns(const SwimmerGeometry& g, const Link& lk, bool with_derivative) {
  LinkColumns out;
  const double ct = g.drag_tangential;
  const double cn = g.drag_normal;
  const Eigen::Vector2d n = perp(lk.t);
  const Eigen::Matrix2d D = ct * lk.t * lk.t.transpose() + cn * n * n.transpose();
  const double len = lk.len;
  const double len3_12 = len * len * len / 12.0;

  // derivative pieces for the link's own joint angle
  const Eigen::Vector2d dt = perp(lk.t);
  const Eigen::Vector2d dm = lk.joint_sign * 0.5 * len * dt;
  Eigen::Matrix2d J;
  J << 0.0, -1.0, 1.0, 0.0;
  const Eigen::Matrix2d dD = J * D - D * J;

  struct Input {
    Eigen::Vector2d w0, w1, dw0, dw1;
  };
  // columns: vx, vy, omega, u at the link's own joint (if any)
  const Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  Input inputs[4];
  int cols[4];
  int ninput = 3;
  inputs[0] = {{1.0, 0.0}, zero, zero, zero};
  cols[0] = 0;
  inputs[1] = {{0.0, 1.0}, zero, zero, zero};
  cols[1] = 1;
  inputs[2] = {perp(lk.m), perp(lk.t), perp(dm), perp(dt)};
  cols[2] = 2;
  if (lk.joint >= 0) {
    const Eigen::Vector2d w0 = lk.joint_sign * 0.5 * len * perp(lk.t);
    inputs[3] = {w0, perp(lk.t), lk.joint_sign * 0.5 * len * perp(dt), perp(dt)};
    cols[3] = 3 + lk.joint;
    ninput = 4;
  }

  for (int i = 0; i < ninput; ++i) {
    const Input& in = inputs[i];
    const Eigen::Vector2d f0 = D * in.w0;
    out.R.block<2, 1>(0, cols[i]) = len * f0;
    out.R(2, cols[i]) = len * cross2(lk.m, f0) + len3_12 * cross2(lk.t, D * in.w1);
    if (with_derivative) {
      const Eigen::Vector2d df0 = dD * in.w0 + D * in.dw0;
      out.dR.block<2, 1>(0, cols[i]) = len * df0;
      out.dR(2, cols[i]) =
          len * (cross2(dm, f0) + cross2(lk.m, df0)) +
          len3_12 * (cross2(dt, D * in.w1) + cross2(lk.t, dD * in.w1 + D * in.dw1));
    }
  }
  return out;
}

struct FullAssembly {
  Eigen::Matrix3d omega_g;
  Eigen::Matrix<double, 3, 2> omega_alpha;
  std::array<Eigen::Matrix3d, 2> d_omega_g;
  std::array<Eigen::Matrix<double, 3, 2>, 2> d_omega_alpha;
};

FullAssembly assemble(const SwimmerGeometry& g, const ShapeState& a, bool with_derivatives) {
  FullAssembly out;
  Eigen::Matrix<double, 3, 5> R = Eigen::Matrix<double, 3, 5>::Zero();
  std::array<Eigen::Matrix<double, 3, 5>, 2> dR = {Eigen::Matrix<double, 3, 5>::Zero(),
                                                   Eigen::Matrix<double, 3, 5>::Zero()};
  for (const Link& lk : make_links(g, a)) {
    const LinkColumns c = link_columns(g, lk, with_derivatives);
    R += c.R;
    if (with_derivatives && lk.joint >= 0) dR[lk.joint] += c.dR;
  }
  out.omega_g = R.leftCols<3>();
  out.omega_alpha = R.rightCols<2>();
  for (int j = 0; j < 2; ++j) {
    out.d_omega_g[j] = dR[j].leftCols<3>();
    out.d_omega_alpha[j] = dR[j].rightCols<2>();
  }
  return out;
}

}  // namespace

std::array<se2::GroupElement, 3> link_frames(const SwimmerGeometry& geom,
                                             const ShapeState& alpha) {
  const auto links = make_links(geom, alpha);
  std::array<se2::GroupElement, 3> frames;
  frames[0] = {0.0, 0.0, 0.0};
  frames[1] = {links[1].m.x(), links[1].m.y(), alpha.alpha1};
  frames[2] = {links[2].m.x(), links[2].m.y(), alpha.alpha2};
  return frames;
}

DragAssembly drag_assembly(const SwimmerGeometry& geom, const ShapeState& alpha) {
  const FullAssembly full = assemble(geom, alpha, false);
  return {full.omega_g, full.omega_alpha};
}

ConnectionEval connection(const SwimmerGeometry& geom, const ShapeState& alpha,
                          bool with_derivatives) {
  if (!shape_in_domain(alpha)) {
    std::ostringstream msg;
    msg << "connection: shape (" << alpha.alpha1 << ", " << alpha.alpha2
        << ") outside (-pi, pi)^2";
    throw ShapeOutOfDomainError(msg.str());
  }
  const FullAssembly full = assemble(geom, alpha, with_derivatives);
  const Eigen::LLT<Eigen::Matrix3d> llt(full.omega_g);
  ConnectionEval out;
  out.A = llt.solve(full.omega_alpha);
  if (with_derivatives) {
    for (int j = 0; j < 2; ++j) {
      out.dA[j] = llt.solve(full.d_omega_alpha[j] - full.d_omega_g[j] * out.A);
    }
  } else {
    out.dA[0].setZero();
    out.dA[1].setZero();
  }
  return out;
}

double connection_jacobian_check(const SwimmerGeometry& geom, const ShapeState& alpha) {
  const ConnectionEval at = connection(geom, alpha);
  const double step = 1e-6;
  double worst = 0.0;
  for (int j = 0; j < 2; ++j) {
    ShapeState plus = alpha;
    ShapeState minus = alpha;
    (j == 0 ? plus.alpha1 : plus.alpha2) += step;
    (j == 0 ? minus.alpha1 : minus.alpha2) -= step;
    const Eigen::Matrix<double, 3, 2> fd =
        (connection(geom, plus).A - connection(geom, minus).A) / (2.0 * step);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 2; ++c) {
        const double denom = std::max(1.0, std::abs(at.dA[j](r, c)));
        worst = std::max(worst, std::abs(fd(r, c) - at.dA[j](r, c)) / denom);
      }
    }
  }
  return worst;
}

}  // namespace purcell
