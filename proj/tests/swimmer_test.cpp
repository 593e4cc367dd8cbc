#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "purcell/swimmer.hpp"

using namespace purcell;

namespace {

constexpr double kPi = 3.14159265358979323846;

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

ShapeState random_shape(std::mt19937_64& rng, double range = 2.8) {
  return {oracles::uniform(rng, -range, range), oracles::uniform(rng, -range, range)};
}

}  // namespace

TEST_CASE("link frames: straight and perpendicular configurations") {
  const SwimmerGeometry geom;
  const auto straight = link_frames(geom, {0, 0});
  for (const auto& f : straight) CHECK(f.theta == 0.0);
  CHECK(straight[0].x == 0.0);
  CHECK(max_abs(Eigen::Vector2d(straight[1].x, straight[1].y) - Eigen::Vector2d(1, 0)) <= 1e-15);
  CHECK(max_abs(Eigen::Vector2d(straight[2].x, straight[2].y) - Eigen::Vector2d(-1, 0)) <= 1e-15);

  const auto bent = link_frames(geom, {kPi / 2, 0});
  CHECK(bent[1].theta == kPi / 2);
  CHECK(std::abs(bent[1].x - 0.5) <= 1e-15);
  CHECK(std::abs(bent[1].y - 0.5) <= 1e-15);
  CHECK(bent[2].theta == 0.0);
  CHECK(std::abs(bent[2].x + 1.0) <= 1e-15);

  SwimmerGeometry longer;
  longer.len0 = 2.0;
  longer.len1 = 0.5;
  const auto lf = link_frames(longer, {0, -kPi / 2});
  CHECK(std::abs(lf[1].x - 1.25) <= 1e-15);
  CHECK(std::abs(lf[2].x + 1.0) <= 1e-15);
  CHECK(std::abs(lf[2].y - 0.5) <= 1e-15);
}

TEST_CASE("drag assembly at the straight shape has the hand-computed values") {
  const SwimmerGeometry geom;  // unit links, c_t = 1, c_n = 2
  const DragAssembly d = drag_assembly(geom, {0, 0});

  Eigen::Matrix3d want_g = Eigen::Vector3d(3.0, 6.0, 4.5).asDiagonal();
  CHECK(max_abs(d.omega_g - want_g) <= 1e-13);

  Eigen::Matrix<double, 3, 2> want_a;
  want_a << 0, 0, 1, -1, 7.0 / 6.0, 7.0 / 6.0;
  CHECK(max_abs(d.omega_alpha - want_a) <= 1e-13);

  // block structure: the vx direction decouples from (vy, omega)
  CHECK(std::abs(d.omega_g(0, 1)) <= 1e-14);
  CHECK(std::abs(d.omega_g(0, 2)) <= 1e-14);
}

TEST_CASE("drag assembly matches the quadrature oracle") {
  const SwimmerGeometry geom;
  std::mt19937_64 rng(201);

  auto check_shape = [&](const ShapeState& a, const SwimmerGeometry& g) {
    Eigen::Matrix3d og;
    Eigen::Matrix<double, 3, 2> oa;
    oracles::drag_by_quadrature(g, a, 2000, og, oa);
    const DragAssembly d = drag_assembly(g, a);
    CHECK(max_abs(d.omega_g - og) <= 1e-8);
    CHECK(max_abs(d.omega_alpha - oa) <= 1e-8);
  };

  check_shape({kPi / 2, -kPi / 2}, geom);
  check_shape({0.3, -0.7}, geom);
  for (int i = 0; i < 15; ++i) check_shape(random_shape(rng), geom);

  SwimmerGeometry odd;
  odd.len0 = 1.7;
  odd.len1 = 0.6;
  odd.len2 = 1.1;
  odd.drag_tangential = 0.8;
  odd.drag_normal = 2.3;
  for (int i = 0; i < 10; ++i) check_shape(random_shape(rng), odd);
}

TEST_CASE("omega_g is symmetric positive definite across the shape domain") {
  const SwimmerGeometry geom;
  std::mt19937_64 rng(202);
  for (int i = 0; i < 100; ++i) {
    const DragAssembly d = drag_assembly(geom, random_shape(rng));
    CHECK(max_abs(d.omega_g - d.omega_g.transpose()) <= 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(d.omega_g);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  // grid sweep per the stated invariant
  double min_eig = 1e300;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const ShapeState a{-3.0 + 6.0 * i / 49.0, -3.0 + 6.0 * j / 49.0};
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(drag_assembly(geom, a).omega_g);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }
  CHECK(min_eig > 0.0);
}

TEST_CASE("connection satisfies the force balance") {
  const SwimmerGeometry geom;
  std::mt19937_64 rng(203);
  for (int i = 0; i < 100; ++i) {
    const ShapeState a = random_shape(rng);
    const ConnectionEval ce = connection(geom, a);
    const DragAssembly d = drag_assembly(geom, a);
    const ControlVector u{oracles::uniform(rng, -2, 2), oracles::uniform(rng, -2, 2)};
    const Eigen::Vector3d xi = -ce.A * u;
    CHECK(max_abs(d.omega_g * xi + d.omega_alpha * u) <= 1e-10);
  }
}

TEST_CASE("connection has the frozen straight-shape value") {
  const SwimmerGeometry geom;
  const ConnectionEval ce = connection(geom, {0, 0});
  Eigen::Matrix<double, 3, 2> want;
  want << 0, 0, 1.0 / 6.0, -1.0 / 6.0, 7.0 / 27.0, 7.0 / 27.0;
  CHECK(max_abs(ce.A - want) <= 1e-13);
  // lateral limb motion produces no axial force at the straight shape
  CHECK(std::abs(ce.A(0, 0)) <= 1e-12);
  CHECK(std::abs(ce.A(0, 1)) <= 1e-12);
}

TEST_CASE("connection matches the quadrature pipeline") {
  const SwimmerGeometry geom;
  const ShapeState a{0.3, -0.7};
  Eigen::Matrix3d og;
  Eigen::Matrix<double, 3, 2> oa;
  oracles::drag_by_quadrature(geom, a, 2000, og, oa);
  const Eigen::Matrix<double, 3, 2> a_oracle = og.ldlt().solve(oa);
  CHECK(max_abs(connection(geom, a).A - a_oracle) <= 1e-8);
}

TEST_CASE("mirror symmetry of the connection") {
  const SwimmerGeometry geom;
  const Eigen::Matrix3d S3 = Eigen::Vector3d(1, -1, -1).asDiagonal();
  const Eigen::Matrix2d S2 = -Eigen::Matrix2d::Identity();
  std::mt19937_64 rng(204);
  for (int i = 0; i < 100; ++i) {
    const ShapeState a = random_shape(rng);
    const Eigen::Matrix<double, 3, 2> lhs =
        S3 * connection(geom, {-a.alpha1, -a.alpha2}).A * S2;
    CHECK(max_abs(lhs - connection(geom, a).A) <= 1e-10);
  }
}

TEST_CASE("analytic connection Jacobian matches finite differences") {
  const SwimmerGeometry geom;
  CHECK(connection_jacobian_check(geom, {0, 0}) <= 1e-6);
  CHECK(connection_jacobian_check(geom, {1.0, 1.0}) <= 1e-6);
  std::mt19937_64 rng(205);
  for (int i = 0; i < 100; ++i) {
    CHECK(connection_jacobian_check(geom, random_shape(rng)) <= 1e-6);
  }
}

TEST_CASE("connection rejects out-of-domain shapes") {
  const SwimmerGeometry geom;
  CHECK_THROWS_AS((void)connection(geom, {kPi, 0}), ShapeOutOfDomainError);
  CHECK_THROWS_AS((void)connection(geom, {0, -kPi}), ShapeOutOfDomainError);
  CHECK_THROWS_AS((void)connection(geom, {kPi + 0.1, 0}), ShapeOutOfDomainError);
  CHECK_NOTHROW((void)connection(geom, {kPi - 1e-3, -kPi + 1e-3}));
  CHECK(shape_in_domain({0.5, -0.5}));
  CHECK(!shape_in_domain({3.5, 0}));
}
