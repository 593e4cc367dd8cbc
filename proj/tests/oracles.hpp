#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>

#include "purcell/se2.hpp"
#include "purcell/swimmer.hpp"

// Independent reference implementations used only to validate the library.
// Everything here is deliberately brute force.
namespace oracles {

// Homogeneous pose matrix assembled from scratch.
Eigen::Matrix3d pose_matrix(double x, double y, double theta);

// (x, y, theta) read back from a homogeneous matrix, theta in (-pi, pi].
Eigen::Vector3d pose_coords(const Eigen::Matrix3d& m);

// Integrates dM/dt = M * hat(X) from the identity over [0, 1] with RK4.
Eigen::Matrix3d exp_by_integration(const purcell::se2::AlgebraVector& X, int steps = 20000);

// Composite Simpson rule, n even.
Eigen::VectorXd simpson(const std::function<Eigen::VectorXd(double)>& f, double a, double b,
                        int n);

// Drag resistance matrices by brute force: world-point trajectories under
// each basis input, velocities by central finite differences, force density
// integrated with Simpson over `segments` intervals per link.
void drag_by_quadrature(const purcell::SwimmerGeometry& geom, const purcell::ShapeState& alpha,
                        int segments, Eigen::Matrix3d& omega_g,
                        Eigen::Matrix<double, 3, 2>& omega_alpha);

double uniform(std::mt19937_64& rng, double lo, double hi);

purcell::se2::GroupElement random_pose(std::mt19937_64& rng, double pos_range = 3.0,
                                       double angle_range = 3.0);
purcell::se2::AlgebraVector random_twist(std::mt19937_64& rng, double lin_range = 3.0,
                                         double angle_range = 3.0);

}  // namespace oracles
