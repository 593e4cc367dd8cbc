#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "purcell/se2.hpp"

using namespace purcell;
namespace g2 = purcell::se2;

namespace {

constexpr double kPi = 3.14159265358979323846;

double pose_diff(const g2::GroupElement& a, const g2::GroupElement& b) {
  const double dtheta = std::remainder(a.theta - b.theta, 2.0 * kPi);
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(dtheta)});
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("compose matches the homogeneous matrix product") {
  const g2::GroupElement a{0, 0, 0};
  const g2::GroupElement b{1, 2, kPi / 3};
  CHECK(pose_diff(g2::compose(a, b), b) == 0.0);

  const auto c = g2::compose({1, 0, kPi / 2}, {1, 0, 0});
  CHECK(pose_diff(c, {1, 1, kPi / 2}) <= 1e-15);

  std::mt19937_64 rng(101);
  for (int i = 0; i < 200; ++i) {
    const auto g1 = oracles::random_pose(rng, 3.0, 8.0);
    const auto g2v = oracles::random_pose(rng, 3.0, 8.0);
    const Eigen::Matrix3d want =
        oracles::pose_matrix(g1.x, g1.y, g1.theta) * oracles::pose_matrix(g2v.x, g2v.y, g2v.theta);
    const auto got = g2::compose(g1, g2v);
    CHECK(max_abs(g2::homogeneous(got) - want) <= 1e-13);
  }
}

TEST_CASE("compose is associative") {
  std::mt19937_64 rng(102);
  for (int i = 0; i < 100; ++i) {
    const auto a = oracles::random_pose(rng);
    const auto b = oracles::random_pose(rng);
    const auto c = oracles::random_pose(rng);
    CHECK(pose_diff(g2::compose(g2::compose(a, b), c), g2::compose(a, g2::compose(b, c))) <=
          1e-13);
  }
}

TEST_CASE("inverse frozen values and matrix oracle") {
  CHECK(pose_diff(g2::inverse({0, 0, 0}), {0, 0, 0}) == 0.0);
  CHECK(pose_diff(g2::inverse({1, 0, 0}), {-1, 0, 0}) == 0.0);

  const auto inv = g2::inverse({1, 2, kPi / 2});
  CHECK(pose_diff(inv, {-2, 1, -kPi / 2}) <= 1e-15);

  std::mt19937_64 rng(103);
  for (int i = 0; i < 200; ++i) {
    const auto g = oracles::random_pose(rng, 3.0, 8.0);
    const Eigen::Matrix3d want = oracles::pose_matrix(g.x, g.y, g.theta).inverse();
    CHECK(max_abs(g2::homogeneous(g2::inverse(g)) - want) <= 1e-13);
    CHECK(pose_diff(g2::compose(g, g2::inverse(g)), {0, 0, 0}) <= 1e-14);
  }
}

TEST_CASE("homogeneous rotation block is orthogonal with unit determinant") {
  std::mt19937_64 rng(104);
  for (int i = 0; i < 100; ++i) {
    const auto g = oracles::random_pose(rng, 5.0, 20.0);
    const Eigen::Matrix2d r = g2::homogeneous(g).topLeftCorner<2, 2>();
    CHECK(max_abs(r * r.transpose() - Eigen::Matrix2d::Identity()) <= 1e-15);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-15);
  }
}

TEST_CASE("canonical_angle maps into (-pi, pi]") {
  CHECK(g2::canonical_angle(0.0) == 0.0);
  CHECK(g2::canonical_angle(kPi) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(g2::canonical_angle(-kPi) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(g2::canonical_angle(3.0 * kPi) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(g2::canonical_angle(7.5 * kPi) == doctest::Approx(-0.5 * kPi).epsilon(1e-15));
  CHECK(g2::canonical_angle(-0.25 * kPi) == doctest::Approx(-0.25 * kPi).epsilon(1e-15));
}

TEST_CASE("hat and unhat are inverse") {
  std::mt19937_64 rng(105);
  for (int i = 0; i < 50; ++i) {
    const auto X = oracles::random_twist(rng);
    const auto back = g2::unhat(g2::hat(X));
    CHECK(max_abs(back.vec() - X.vec()) == 0.0);
  }
}

TEST_CASE("exp frozen values") {
  CHECK(pose_diff(g2::exp({1, 0, 0}), {1, 0, 0}) == 0.0);
  CHECK(pose_diff(g2::exp({0, 0, kPi / 2}), {0, 0, kPi / 2}) == 0.0);
  const auto g = g2::exp({1, 0, kPi / 2});
  CHECK(std::abs(g.x - 2.0 / kPi) <= 1e-15);
  CHECK(std::abs(g.y - 2.0 / kPi) <= 1e-15);
  CHECK(g.theta == kPi / 2);
}

TEST_CASE("exp agrees with numerical integration of the left-invariant flow") {
  std::mt19937_64 rng(106);
  for (int i = 0; i < 40; ++i) {
    const auto X = oracles::random_twist(rng, 2.0, 3.0);
    const Eigen::Matrix3d want = oracles::exp_by_integration(X);
    CHECK(max_abs(g2::homogeneous(g2::exp(X)) - want) <= 1e-10);
  }
  // near-zero rotation exercises the series branch
  for (int i = 0; i < 20; ++i) {
    const auto X = oracles::random_twist(rng, 2.0, 1e-5);
    const Eigen::Matrix3d want = oracles::exp_by_integration(X);
    CHECK(max_abs(g2::homogeneous(g2::exp(X)) - want) <= 1e-10);
  }
}

TEST_CASE("log frozen values") {
  const auto z = g2::log({0, 0, 0});
  CHECK(max_abs(z.vec()) == 0.0);
  const auto t = g2::log({1, 0, 0});
  CHECK(max_abs(t.vec() - Eigen::Vector3d(1, 0, 0)) == 0.0);
  const auto X = g2::log({2.0 / kPi, 2.0 / kPi, kPi / 2});
  CHECK(max_abs(X.vec() - Eigen::Vector3d(1, 0, kPi / 2)) <= 1e-15);
}

TEST_CASE("log canonicalizes unwrapped angles") {
  const g2::GroupElement g{0.3, -0.4, 0.7 + 6.0 * kPi};
  const auto X = g2::log(g);
  CHECK(std::abs(X.omega - 0.7) <= 1e-12);
  CHECK(pose_diff(g2::exp(X), g) <= 1e-12);
}

TEST_CASE("log throws outside the injectivity radius") {
  CHECK_THROWS_AS((void)g2::log({1, 2, kPi}), InjectivityRadiusError);
  CHECK_THROWS_AS((void)g2::log({1, 2, -kPi}), InjectivityRadiusError);
  CHECK_THROWS_AS((void)g2::log({1, 2, kPi - 1e-10}), InjectivityRadiusError);
  CHECK_NOTHROW((void)g2::log({1, 2, kPi - 1e-3}));
  // the margin is configurable
  CHECK_THROWS_AS((void)g2::log({1, 2, kPi - 1e-3}, 1e-2), InjectivityRadiusError);
}

TEST_CASE("exp/log roundtrips") {
  std::mt19937_64 rng(107);
  for (int i = 0; i < 1000; ++i) {
    const auto X = oracles::random_twist(rng, 3.0, kPi - 0.1);
    const auto back = g2::log(g2::exp(X));
    CHECK(max_abs(back.vec() - X.vec()) <= 1e-12);
  }
  for (int i = 0; i < 1000; ++i) {
    const auto g = oracles::random_pose(rng, 3.0, kPi - 0.1);
    const auto back = g2::exp(g2::log(g));
    CHECK(pose_diff(back, g) <= 1e-12);
  }
}

TEST_CASE("Ad frozen value and identity case") {
  std::mt19937_64 rng(108);
  const auto X = oracles::random_twist(rng);
  CHECK(max_abs(g2::Ad({0, 0, 0}, X).vec() - X.vec()) == 0.0);

  const auto v = g2::Ad({1, 0, 0}, {0, 0, 1});
  CHECK(max_abs(v.vec() - Eigen::Vector3d(0, -1, 1)) <= 1e-15);
}

TEST_CASE("Ad matches the conjugation finite difference") {
  std::mt19937_64 rng(109);
  const double s = 1e-7;
  for (int i = 0; i < 100; ++i) {
    const auto g = oracles::random_pose(rng, 2.0, 2.0);
    const auto X = oracles::random_twist(rng, 2.0, 2.0);
    g2::AlgebraVector sX{s * X.vx, s * X.vy, s * X.omega};
    const auto conj = g2::compose(g2::compose(g, g2::exp(sX)), g2::inverse(g));
    const Eigen::Vector3d fd = g2::log(conj).vec() / s;
    const Eigen::Vector3d an = g2::Ad(g, X).vec();
    CHECK(max_abs(fd - an) <= 1e-6 * std::max(1.0, max_abs(an)));
  }
}

TEST_CASE("Ad is a homomorphism") {
  std::mt19937_64 rng(110);
  for (int i = 0; i < 100; ++i) {
    const auto a = oracles::random_pose(rng, 2.0, 6.0);
    const auto b = oracles::random_pose(rng, 2.0, 6.0);
    const Eigen::Matrix3d lhs = g2::Ad_matrix(g2::compose(a, b));
    const Eigen::Matrix3d rhs = g2::Ad_matrix(a) * g2::Ad_matrix(b);
    CHECK(max_abs(lhs - rhs) <= 1e-13);
  }
}

TEST_CASE("coAd pairing identity and frozen value") {
  std::mt19937_64 rng(111);
  for (int i = 0; i < 100; ++i) {
    const auto g = oracles::random_pose(rng, 2.0, 6.0);
    const auto X = oracles::random_twist(rng);
    const g2::AlgebraCovector a{oracles::uniform(rng, -2, 2), oracles::uniform(rng, -2, 2),
                                oracles::uniform(rng, -2, 2)};
    CHECK(std::abs(g2::pairing(g2::coAd(g, a), X) - g2::pairing(a, g2::Ad(g, X))) <= 1e-13);
    CHECK(max_abs(g2::coAd({0, 0, 0}, a).vec() - a.vec()) == 0.0);
  }
  // against the transpose-of-Ad oracle: the omega row of Ad(1,0,0)^T is
  // (0,-1,1), and applying the transpose to the dual basis vector e3* picks
  // out the omega row of Ad itself.
  const Eigen::Matrix3d adT = g2::Ad_matrix({1, 0, 0}).transpose();
  CHECK(max_abs(adT.row(2).transpose() - Eigen::Vector3d(0, -1, 1)) <= 1e-15);
  const auto r = g2::coAd({1, 0, 0}, {0, 0, 1});
  CHECK(max_abs(r.vec() - adT * Eigen::Vector3d(0, 0, 1)) <= 1e-15);
  CHECK(max_abs(r.vec() - Eigen::Vector3d(0, 0, 1)) <= 1e-15);
}

TEST_CASE("dlog_star trivial and small-X behavior") {
  const g2::AlgebraCovector zeta{0.3, -1.2, 0.7};
  const auto r = g2::dlog_star({0, 0, 0}, zeta);
  CHECK(max_abs(r.vec() - zeta.vec()) == 0.0);

  std::mt19937_64 rng(112);
  for (double scale : {1e-3, 1e-6, 1e-9}) {
    const auto X = oracles::random_twist(rng, scale, scale);
    const auto d = g2::dlog_star(X, zeta);
    CHECK(max_abs(d.vec() - zeta.vec()) <= 10.0 * scale);
  }
}

TEST_CASE("dlog_star matches the directional finite difference of log") {
  std::mt19937_64 rng(113);
  for (int i = 0; i < 100; ++i) {
    const auto X = oracles::random_twist(rng, 2.0, kPi - 0.3);
    auto eta = oracles::random_twist(rng).vec();
    eta.normalize();
    const g2::AlgebraCovector zeta{oracles::uniform(rng, -2, 2), oracles::uniform(rng, -2, 2),
                                   oracles::uniform(rng, -2, 2)};
    const auto gX = g2::exp(X);
    const double want = g2::pairing(g2::dlog_star(X, zeta), g2::AlgebraVector(eta));

    // one-sided difference, as the convention is stated
    const double s = 1e-6;
    const auto plus = g2::log(g2::compose(gX, g2::exp(g2::AlgebraVector(s * eta))));
    const double fwd = zeta.vec().dot((plus.vec() - X.vec()) / s);
    CHECK(std::abs(fwd - want) <= 1e-6 * std::max(1.0, std::abs(want)));

    // central difference pins it tighter
    const auto minus = g2::log(g2::compose(gX, g2::exp(g2::AlgebraVector(-s * eta))));
    const double ctr = zeta.vec().dot((plus.vec() - minus.vec()) / (2.0 * s));
    CHECK(std::abs(ctr - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("dlog and dexp matrices are exact inverses") {
  std::mt19937_64 rng(114);
  for (int i = 0; i < 300; ++i) {
    const auto X = oracles::random_twist(rng, 3.0, kPi - 0.15);
    const Eigen::Matrix3d prod = g2::dlog_matrix(X) * g2::dexp_matrix(X);
    CHECK(max_abs(prod - Eigen::Matrix3d::Identity()) <= 1e-13);
  }
  // straddle the series switch points
  for (double w : {1e-5, 9.9e-5, 1.01e-4, 9.9e-3, 1.01e-2, 0.5}) {
    for (double sign : {-1.0, 1.0}) {
      const g2::AlgebraVector X{1.3, -0.8, sign * w};
      const Eigen::Matrix3d prod = g2::dlog_matrix(X) * g2::dexp_matrix(X);
      CHECK(max_abs(prod - Eigen::Matrix3d::Identity()) <= 1e-13);
    }
  }
}

TEST_CASE("dlog coefficient branches join smoothly") {
  for (double w0 : {1e-4, 1e-2}) {
    const g2::AlgebraVector lo{1.0, -2.0, w0 * (1.0 - 1e-9)};
    const g2::AlgebraVector hi{1.0, -2.0, w0 * (1.0 + 1e-9)};
    CHECK(max_abs(g2::dlog_matrix(lo) - g2::dlog_matrix(hi)) <= 1e-11);
    CHECK(max_abs(g2::dexp_matrix(lo) - g2::dexp_matrix(hi)) <= 1e-11);
  }
}

TEST_CASE("dlog_star_inv roundtrips and stays continuous at zero") {
  std::mt19937_64 rng(115);
  for (int i = 0; i < 300; ++i) {
    const auto X = oracles::random_twist(rng, 3.0, kPi - 0.15);
    const g2::AlgebraCovector rho{oracles::uniform(rng, -3, 3), oracles::uniform(rng, -3, 3),
                                  oracles::uniform(rng, -3, 3)};
    const auto zeta = g2::dlog_star_inv(X, rho);
    const auto back = g2::dlog_star(X, zeta);
    CHECK(max_abs(back.vec() - rho.vec()) <= 1e-12);
  }
  const g2::AlgebraCovector rho{0.4, 0.5, -0.6};
  CHECK(max_abs(g2::dlog_star_inv({0, 0, 0}, rho).vec() - rho.vec()) == 0.0);
  CHECK(max_abs(g2::dlog_star_inv({1e-10, -1e-10, 1e-10}, rho).vec() - rho.vec()) <= 1e-9);
}

TEST_CASE("dlog_star respects the injectivity radius") {
  const g2::AlgebraCovector zeta{1, 0, 0};
  CHECK_THROWS_AS((void)g2::dlog_star({0, 0, kPi}, zeta), InjectivityRadiusError);
  CHECK_THROWS_AS((void)g2::dlog_star_inv({0, 0, -kPi}, zeta), InjectivityRadiusError);
  CHECK_NOTHROW((void)g2::dlog_star({0, 0, kPi - 1e-3}, zeta));
}
