#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace maqp::linalg {

template <class Apply>
double lanczos_spectral_norm(Index n, Apply&& apply, int max_steps, double tol) {
  if (n == 0) return 0.0;
  const Index steps = std::min<Index>(n, max_steps);
  Mat V(n, steps + 1);
  // Fixed pseudo-random start so results are reproducible.
  Vec v(n);
  std::uint64_t s = 0x9E3779B97F4A7C15ull;
  for (Index i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v(i) = 0.5 + static_cast<double>(s >> 11) * 0x1.0p-53;
  }
  v.normalize();
  V.col(0) = v;
  Vec alpha(steps), beta(steps);
  double cur = 0.0;
  Vec w(n);
  for (Index k = 0; k < steps; ++k) {
    w.setZero();
    apply(V.col(k), w);
    alpha(k) = V.col(k).dot(w);
    // Full reorthogonalization, applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      Vec c = V.leftCols(k + 1).transpose() * w;
      w -= V.leftCols(k + 1) * c;
    }
    beta(k) = w.norm();
    const Index m = k + 1;
    const bool breakdown = beta(k) <= 1e-14 * std::max(1.0, std::abs(alpha(k)) + beta(k));
    // The Ritz solve is O(m^3), so long runs only test every tenth step.
    if (!breakdown && m > 20 && m % 10 != 0 && m < steps) {
      V.col(k + 1) = w / beta(k);
      continue;
    }
    Mat Tm = Mat::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      Tm(i, i) = alpha(i);
      if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(Tm);
    const Index top = std::abs(es.eigenvalues()(0)) > std::abs(es.eigenvalues()(m - 1)) ? 0 : m - 1;
    cur = std::abs(es.eigenvalues()(top));
    // ||M y - theta y|| for the Ritz pair is beta_k times the last entry of its eigenvector.
    const double residual = beta(k) * std::abs(es.eigenvectors()(m - 1, top));
    if (breakdown || residual <= tol * std::max(1.0, cur)) return cur;
    V.col(k + 1) = w / beta(k);
  }
  return cur;
}

}  // namespace maqp::linalg
