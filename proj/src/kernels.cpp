#include "purcell/kernels.hpp"

#include <cstddef>
#include <sstream>

#include "purcell/errors.hpp"

namespace purcell::kernels {

namespace {

// Single compiled body shared by both Exec variants. noinline blocks the
// compiler from specializing it per call site, which keeps serial and
// OpenMP results bitwise identical.
[[gnu::noinline]] void fill_pack(const SwimmerGeometry& geom, const ShapeState& alpha,
                                 const ControlVector& u, double h, bool with_derivatives,
                                 StepPack& out) {
  const ConnectionEval conn = connection(geom, alpha, with_derivatives);
  out.alpha = alpha;
  out.A = conn.A;
  out.X = se2::AlgebraVector(Eigen::Vector3d(-h * (conn.A * u)));
  out.E = se2::exp(out.X);
  if (with_derivatives) {
    out.dA_u[0] = conn.dA[0] * u;
    out.dA_u[1] = conn.dA[1] * u;
    out.dexpT = se2::dexp_matrix(out.X).transpose();
    out.transportT = se2::Ad_matrix(se2::inverse(out.E)).transpose();
  }
}

}  // namespace

std::vector<ShapeState> shape_scan(const ShapeState& alpha0, std::span<const ControlVector> u,
                                   double h) {
  std::vector<ShapeState> alphas;
  alphas.reserve(u.size() + 1);
  alphas.push_back(alpha0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const ShapeState& a = alphas.back();
    alphas.push_back(ShapeState{a.alpha1 + h * u[k](0), a.alpha2 + h * u[k](1)});
  }
  return alphas;
}

void build_step_packs(const SwimmerGeometry& geom, std::span<const ShapeState> alphas,
                      std::span<const ControlVector> u, double h, bool with_derivatives,
                      std::span<StepPack> out, Exec exec) {
  if (alphas.size() < u.size() || out.size() != u.size()) {
    throw Error("build_step_packs: size mismatch (alphas " + std::to_string(alphas.size()) +
                ", controls " + std::to_string(u.size()) + ", out " +
                std::to_string(out.size()) + ")");
  }
  // Domain check up front so the parallel region below cannot throw.
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!shape_in_domain(alphas[k])) {
      std::ostringstream msg;
      msg << "build_step_packs: shape out of domain at step " << k << ": alpha = ("
          << alphas[k].alpha1 << ", " << alphas[k].alpha2 << ")";
      throw ShapeOutOfDomainError(msg.str());
    }
  }
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(u.size());
  if (exec == Exec::parallel) {
#if defined(PURCELL_HAVE_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      fill_pack(geom, alphas[k], u[k], h, with_derivatives, out[k]);
    }
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      fill_pack(geom, alphas[k], u[k], h, with_derivatives, out[k]);
    }
  }
}

}  // namespace purcell::kernels
