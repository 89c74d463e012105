#pragma once

#include "maqp/problem.hpp"

namespace maqp::linalg {

bool is_diagonal(const Mat& m);

/// Ascending eigenvalues of a symmetric matrix.
Vec sym_eigenvalues(const Mat& m);
double min_eigenvalue(const Mat& m);
double max_eigenvalue(const Mat& m);

/// Descending singular values.
Vec singular_values(const Mat& m);

/// Numerical rank with the relative cutoff sigma <= 1e-10 * sigma_max.
Index numerical_rank(const Vec& singular_values_desc);
inline constexpr double kRankTol = 1e-10;

/// Largest-magnitude eigenvalue of a symmetric operator given by `apply`
/// (y = M x), via Lanczos with full reorthogonalization.
template <class Apply>
double lanczos_spectral_norm(Index n, Apply&& apply, int max_steps = 2000,
                             double tol = 1e-13);

/// Moore-Penrose pseudo-inverse with the same rank cutoff.
Mat pseudo_inverse(const Mat& m);

}  // namespace maqp::linalg

#include "maqp/linalg_impl.hpp"
