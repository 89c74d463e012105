#pragma once

#include <vector>

#include "maqp/problem.hpp"

namespace maqp {

/// A(x) = M x_j + b with every block other than j held fixed.
struct BlockAffineForm {
  Mat M;
  Vec b;
  /// Rows where M is nonzero; all other rows of M are zero.
  std::vector<Index> active_rows;
};

struct LagrangianPoint {
  Vec x, z, w;
  double rho = 0.0;
  /// Smooth part of L. The true value is +inf when `infeasible` is set.
  double value = 0.0;
  bool infeasible = false;
  Vec grad_x, grad_z, grad_w;
};

Vec eval_A(const MultiAffineOperator& A, const Vec& x);

/// Throws DimensionError, or InvalidOperatorError if block j has a nonzero
/// diagonal block in some C_i.
BlockAffineForm reduce_block(const MultiAffineOperator& A, const Vec& x, Index j);

/// Same form, but b is derived from an already known Ax = A(x).
BlockAffineForm reduce_block(const MultiAffineOperator& A, const Vec& x, Index j,
                             const Vec& Ax);

/// J_A(x)^T v, where row i of J_A is (C_i x + d_i)^T.
Vec jacobian_transpose_times(const MultiAffineOperator& A, const Vec& x, const Vec& v);

/// Dense Jacobian, n_c x n_x.
Mat jacobian(const MultiAffineOperator& A, const Vec& x);

LagrangianPoint eval_lagrangian(const ProblemSpec& spec, const Vec& x, const Vec& z,
                                const Vec& w, double rho);

/// L in extended precision, so that gaps far below one ulp of L stay visible.
long double lagrangian_extended(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& w,
                                double rho);

}  // namespace maqp
