#include "maqp/operator.hpp"

#include <cmath>

#include "maqp/errors.hpp"

namespace maqp {

namespace {

void require_len(const Vec& v, Index n, const char* what) {
  if (v.size() != n)
    throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(n));
}

}  // namespace

Vec eval_A(const MultiAffineOperator& A, const Vec& x) {
  require_len(x, A.n_x(), "x");
  Vec out(A.n_c());
  for (Index i = 0; i < A.n_c(); ++i) {
    const auto& r = A.row(i);
    double lin = 0.0;
    for (const auto& [k, v] : A.d_nonzeros(i)) lin += v * x(k);
    out(i) = 0.5 * r.C.quad(x) + lin + r.e;
  }
  return out;
}

BlockAffineForm reduce_block(const MultiAffineOperator& A, const Vec& x, Index j,
                             const Vec& Ax) {
  require_len(x, A.n_x(), "x");
  require_len(Ax, A.n_c(), "A(x)");
  if (j < 0 || j >= A.blocks().count())
    throw DimensionError("block index " + std::to_string(j) + " out of range");
  const auto& bi = A.block_index(j);
  if (!bi.diagonal_violations.empty())
    throw InvalidOperatorError("C_" + std::to_string(bi.diagonal_violations.front()) +
                               " is not affine in block " + std::to_string(j));
  const Index nj = A.blocks().size(j);
  BlockAffineForm form;
  form.M = Mat::Zero(A.n_c(), nj);
  for (const auto& c : bi.couplings) form.M(c.row, c.local) += c.value * x(c.other);
  for (const auto& l : bi.linear) form.M(l.row, l.local) += l.value;
  form.active_rows = bi.active_rows;
  form.b = Ax;
  const auto xj = x.segment(A.blocks().offset(j), nj);
  for (Index r : bi.active_rows) form.b(r) -= form.M.row(r).dot(xj);
  return form;
}

BlockAffineForm reduce_block(const MultiAffineOperator& A, const Vec& x, Index j) {
  require_len(x, A.n_x(), "x");
  if (j < 0 || j >= A.blocks().count())
    throw DimensionError("block index " + std::to_string(j) + " out of range");
  Vec x0 = x;
  x0.segment(A.blocks().offset(j), A.blocks().size(j)).setZero();
  BlockAffineForm form = reduce_block(A, x, j, eval_A(A, x));
  // b is defined as A evaluated with block j zeroed.
  form.b = eval_A(A, x0);
  return form;
}

Vec jacobian_transpose_times(const MultiAffineOperator& A, const Vec& x, const Vec& v) {
  require_len(x, A.n_x(), "x");
  require_len(v, A.n_c(), "v");
  Vec g = Vec::Zero(A.n_x());
  for (Index i = 0; i < A.n_c(); ++i) {
    if (v(i) == 0.0) continue;
    A.row(i).C.mul_add(x, v(i), g);
    for (const auto& [k, d] : A.d_nonzeros(i)) g(k) += v(i) * d;
  }
  return g;
}

Mat jacobian(const MultiAffineOperator& A, const Vec& x) {
  require_len(x, A.n_x(), "x");
  Mat J = Mat::Zero(A.n_c(), A.n_x());
  for (Index i = 0; i < A.n_c(); ++i) {
    Vec g = Vec::Zero(A.n_x());
    A.row(i).C.mul_add(x, 1.0, g);
    for (const auto& [k, d] : A.d_nonzeros(i)) g(k) += d;
    J.row(i) = g.transpose();
  }
  return J;
}

LagrangianPoint eval_lagrangian(const ProblemSpec& spec, const Vec& x, const Vec& z,
                                const Vec& w, double rho) {
  require_len(x, spec.n_x(), "x");
  require_len(z, spec.n_z(), "z");
  require_len(w, spec.n_c(), "w");
  if (!(rho >= 0.0)) throw DimensionError("rho must be nonnegative");
  LagrangianPoint p;
  p.x = x;
  p.z = z;
  p.w = w;
  p.rho = rho;
  const Vec r = eval_A(spec.A, x) + spec.Q * z;
  p.value = spec.f_value(x) + spec.phi.value(z) + w.dot(r) + 0.5 * rho * r.squaredNorm();
  p.infeasible = !spec.x_feasible(x);
  const Vec v = w + rho * r;
  p.grad_x = spec.f_gradient(x) + jacobian_transpose_times(spec.A, x, v);
  p.grad_z = spec.phi.gradient(z) + spec.Q.transpose() * v;
  p.grad_w = r;
  return p;
}

namespace {

using Ext = long double;

Ext quadratic_ext(const QuadraticObjective& o, const Vec& x) {
  Ext v = o.r;
  for (Index i = 0; i < x.size(); ++i) {
    Ext row = 0.0L;
    for (Index j = 0; j < x.size(); ++j) row += Ext(o.P(i, j)) * x(j);
    v += 0.5L * Ext(x(i)) * row + Ext(o.q(i)) * x(i);
  }
  return v;
}

}  // namespace

long double lagrangian_extended(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& w,
                                double rho) {
  Ext v = quadratic_ext(spec.f, x) + quadratic_ext(spec.phi, z);
  for (const auto& t : spec.nonconvex_terms) {
    const Ext s = std::sin(Ext(x(t.index)));
    v += Ext(t.weight) * s * s;
  }
  Ext rr = 0.0L;
  for (Index i = 0; i < spec.n_c(); ++i) {
    const ConstraintRow& row = spec.A.row(i);
    Ext r = row.e;
    for (const auto& e : row.C.entries()) {
      const Ext t = Ext(e.value) * x(e.row) * x(e.col);
      r += (e.row == e.col) ? 0.5L * t : t;
    }
    for (const auto& [k, d] : spec.A.d_nonzeros(i)) r += Ext(d) * x(k);
    for (Index j = 0; j < spec.n_z(); ++j) r += Ext(spec.Q(i, j)) * z(j);
    v += Ext(w(i)) * r;
    rr += r * r;
  }
  return v + 0.5L * Ext(rho) * rr;
}

}  // namespace maqp
