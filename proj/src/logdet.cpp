#include "cfmimo/logdet.hpp"

#include <cmath>

namespace cfmimo::logdet {

namespace {
const double kLog2 = std::log(2.0);

double capacity_at_u(const VecD& lam, double u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) acc += std::log1p(lam(i) * u);
  return acc / kLog2;
}

double capacity_slope_at_u(const VecD& lam, double u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) acc += lam(i) / (1.0 + lam(i) * u);
  return acc / kLog2;
}
}  // namespace

VecD psd_eigenvalues(const MatC& A) {
  Eigen::SelfAdjointEigenSolver<MatC> eig(0.5 * (A + A.adjoint()));
  return eig.eigenvalues().cwiseMax(0.0);
}

double capacity_bits(const VecD& eigvals, double sigma2) {
  if (!(sigma2 > 0)) return eigvals.maxCoeff() > 0 ? kInf : 0.0;
  return capacity_at_u(eigvals, 1.0 / sigma2);
}

double solve_noise_level_from_eigs(const VecD& eigvals, double target_bits, double rel_tol) {
  if (std::isinf(target_bits)) return 0.0;
  if (!(target_bits > 0)) throw std::invalid_argument("solve_noise_level: target must be > 0");
  const double lam_max = eigvals.maxCoeff();
  if (!(lam_max > 0)) return 0.0;  // zero signal: any sigma fits, take the smallest

  // Bracket u = 1/sigma^2 so the capacity straddles the target.
  double u_lo = 0.0, u_hi = 1.0 / lam_max;
  while (capacity_at_u(eigvals, u_hi) < target_bits) {
    u_hi *= 4.0;
    if (std::isinf(u_hi)) return 0.0;  // target unreachable in double range
  }

  const double tol = rel_tol * target_bits;
  double u = u_hi;
  for (int it = 0; it < 200; ++it) {
    const double g = capacity_at_u(eigvals, u);
    if (std::abs(g - target_bits) <= tol) break;
    (g < target_bits ? u_lo : u_hi) = u;
    const double slope = capacity_slope_at_u(eigvals, u);
    double u_next = slope > 0 ? u + (target_bits - g) / slope : u;
    if (!(u_next > u_lo) || !(u_next < u_hi)) u_next = 0.5 * (u_lo + u_hi);
    u = u_next;
  }
  return 1.0 / std::sqrt(u);
}

double solve_noise_level(const MatC& A, double target_bits, double rel_tol) {
  return solve_noise_level_from_eigs(psd_eigenvalues(A), target_bits, rel_tol);
}

}  // namespace cfmimo::logdet
