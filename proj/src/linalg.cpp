#include "maqp/linalg.hpp"

#include <Eigen/SVD>

namespace maqp::linalg {

bool is_diagonal(const Mat& m) {
  if (m.rows() != m.cols()) return false;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

Vec sym_eigenvalues(const Mat& m) {
  if (m.size() == 0) return Vec();
  if (is_diagonal(m)) {
    Vec d = m.diagonal();
    std::sort(d.data(), d.data() + d.size());
    return d;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Mat& m) {
  Vec e = sym_eigenvalues(m);
  return e.size() ? e(0) : 0.0;
}

double max_eigenvalue(const Mat& m) {
  Vec e = sym_eigenvalues(m);
  return e.size() ? e(e.size() - 1) : 0.0;
}

Vec singular_values(const Mat& m) {
  if (m.size() == 0) return Vec();
  const Index k = std::min(m.rows(), m.cols());
  bool diag = true;
  for (Index j = 0; j < m.cols() && diag; ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) {
        diag = false;
        break;
      }
  if (diag) {
    Vec s(k);
    for (Index i = 0; i < k; ++i) s(i) = std::abs(m(i, i));
    std::sort(s.data(), s.data() + k, std::greater<>());
    return s;
  }
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues();
}

Index numerical_rank(const Vec& s) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double cut = kRankTol * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

Mat pseudo_inverse(const Mat& m) {
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const Index r = numerical_rank(s);
  Vec inv = Vec::Zero(s.size());
  for (Index i = 0; i < r; ++i) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace maqp::linalg
