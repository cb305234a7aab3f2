#pragma once

#include "cfmimo/types.hpp"

namespace cfmimo::logdet {

/// log2 det(I + A / sigma2) for Hermitian PSD A given its eigenvalues.
double capacity_bits(const VecD& eigvals, double sigma2);

/// Eigenvalues of a Hermitian PSD matrix, clamped at zero.
VecD psd_eigenvalues(const MatC& A);

/// Smallest sigma >= 0 with log2 det(I + A/sigma^2) = target_bits, found by
/// bracketing bisection with Newton acceleration on u = 1/sigma^2.
/// Returns 0 when target_bits is infinite or A is (numerically) zero.
double solve_noise_level_from_eigs(const VecD& eigvals, double target_bits, double rel_tol = 1e-10);

double solve_noise_level(const MatC& A, double target_bits, double rel_tol = 1e-10);

}  // namespace cfmimo::logdet
