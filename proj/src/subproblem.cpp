#include "maqp/subproblem.hpp"

#include <cmath>

#include "maqp/linalg.hpp"

namespace maqp {

double BlockQP::value(const Vec& u) const {
  double v = 0.5 * u.dot(H * u) + g.dot(u) + c0;
  for (const auto& t : sine_terms) {
    const double s = std::sin(u(t.index));
    v += t.weight * s * s;
  }
  return v;
}

Vec BlockQP::gradient(const Vec& u) const {
  Vec gr = H * u + g;
  for (const auto& t : sine_terms) gr(t.index) += t.weight * std::sin(2.0 * u(t.index));
  return gr;
}

BlockQP assemble_block_qp(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& w,
                          double rho, Index j, const BlockAffineForm& form) {
  const Index off = spec.blocks.offset(j);
  const Index nj = spec.blocks.size(j);
  BlockQP qp;
  qp.set = spec.indicators[static_cast<size_t>(j)];
  const auto Pjj = spec.f.P.block(off, off, nj, nj);
  const auto xj = x.segment(off, nj);
  qp.g = spec.f.P.middleRows(off, nj) * x + spec.f.q.segment(off, nj) - Pjj * xj;
  qp.H = Pjj;
  // Only rows where M is nonzero contribute.
  const Index na = static_cast<Index>(form.active_rows.size());
  if (na > 0) {
    Mat Ma(na, nj);
    Vec va(na);
    for (Index k = 0; k < na; ++k) {
      const Index r = form.active_rows[static_cast<size_t>(k)];
      Ma.row(k) = form.M.row(r);
      const double res = form.b(r) + spec.Q.row(r).dot(z);
      va(k) = w(r) + rho * res;
    }
    qp.H.noalias() += rho * Ma.transpose() * Ma;
    qp.g.noalias() += Ma.transpose() * va;
  }
  for (const auto& t : spec.nonconvex_terms)
    if (t.index >= off && t.index < off + nj) qp.sine_terms.push_back({t.index - off, t.weight});
  return qp;
}

BlockQP assemble_block_qp(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& w,
                          double rho, Index j) {
  check_dimensions(spec);
  if (x.size() != spec.n_x() || z.size() != spec.n_z() || w.size() != spec.n_c())
    throw DimensionError("point dimensions do not match the spec");
  if (j < 0 || j >= spec.blocks.count())
    throw DimensionError("block index " + std::to_string(j) + " out of range");
  const BlockAffineForm form = reduce_block(spec.A, x, j);
  BlockQP qp = assemble_block_qp(spec, x, z, w, rho, j, form);
  const Vec xj = x.segment(spec.blocks.offset(j), spec.blocks.size(j));
  qp.c0 = eval_lagrangian(spec, x, z, w, rho).value - qp.value(xj);
  return qp;
}

double kkt_residual(const BlockQP& qp, const Vec& u) {
  return (u - project(qp.set, u - qp.gradient(u))).norm();
}

namespace {

struct Curvature {
  double mu;
  double lip;
};

Curvature curvature(const BlockQP& qp) {
  const Vec ev = linalg::sym_eigenvalues(qp.H);
  double extra = 0.0;
  for (const auto& t : qp.sine_terms) extra += 2.0 * std::abs(t.weight);
  return {ev(0) - extra, ev(ev.size() - 1) + extra};
}

// Estimate of qp(u) - min qp from the unit-step fixed-point residual.
double gap_estimate(const Curvature& c, double residual) {
  const double mu = std::max(c.mu, 1e-300);
  const double L = std::max(c.lip, 1.0);
  return L * L * residual * residual / (2.0 * mu);
}

SubproblemResult finish(const BlockQP& qp, Vec u, int iters, const Curvature& c) {
  SubproblemResult res;
  res.kkt_residual = kkt_residual(qp, u);
  res.objective_value = qp.value(u);
  res.minimizer = std::move(u);
  res.inner_iterations = iters;
  res.suboptimality_bound = gap_estimate(c, res.kkt_residual);
  return res;
}

}  // namespace

SubproblemResult solve_qp_exact(const BlockQP& qp, const Vec& start) {
  if (qp.H.rows() != qp.g.size() || qp.H.cols() != qp.g.size())
    throw DimensionError("BlockQP H and g dimensions differ");
  const Curvature c = curvature(qp);
  const bool free = std::holds_alternative<FreeSet>(qp.set);
  if (free && qp.sine_terms.empty()) {
    Eigen::LLT<Mat> llt(qp.H);
    Vec u = (llt.info() == Eigen::Success) ? Vec(llt.solve(-qp.g)) : Vec(qp.H.ldlt().solve(-qp.g));
    return finish(qp, std::move(u), 1, c);
  }

  // Accelerated projected gradient with gradient-based restart.
  const double tol = 1e-10 * (1.0 + qp.g.norm());
  const double step = 1.0 / c.lip;
  Vec u = project(qp.set, start.size() == qp.dim() ? start : Vec(Vec::Zero(qp.dim())));
  Vec y = u;
  double t = 1.0;
  Vec best = u;
  double best_res = kkt_residual(qp, u);
  if (best_res <= tol) return finish(qp, std::move(u), 0, c);
  for (int it = 1; it <= kExactIterationCap; ++it) {
    Vec un = project(qp.set, y - step * qp.gradient(y));
    if ((y - un).dot(un - u) > 0.0) {
      t = 1.0;
      un = project(qp.set, u - step * qp.gradient(u));
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = un + ((t - 1.0) / tn) * (un - u);
    u = std::move(un);
    t = tn;
    const double res = kkt_residual(qp, u);
    if (res < best_res) {
      best_res = res;
      best = u;
    }
    if (res <= tol) return finish(qp, std::move(u), it, c);
  }
  throw NotConvergedError("projected gradient hit the iteration cap",
                          finish(qp, best, kExactIterationCap, c));
}

SubproblemResult solve_qp_exact(const BlockQP& qp) {
  return solve_qp_exact(qp, Vec::Zero(qp.dim()));
}

SubproblemResult solve_qp_inexact(const BlockQP& qp, int inner_iters, const Vec& start,
                                  bool certify) {
  if (inner_iters < 1) throw DimensionError("inner_iters must be at least 1");
  const Curvature c = curvature(qp);
  const double step = 1.0 / c.lip;
  const Vec u0 = start.size() == qp.dim() ? start : Vec(Vec::Zero(qp.dim()));
  Vec u = u0;
  Vec last_step = Vec::Zero(qp.dim());
  for (int it = 0; it < inner_iters; ++it) {
    Vec un = project(qp.set, u - step * qp.gradient(u));
    last_step = un - u;
    u = std::move(un);
  }
  SubproblemResult res;
  res.kkt_residual = kkt_residual(qp, u);
  res.objective_value = qp.value(u);
  res.inner_iterations = inner_iters;
  if (certify) {
    const auto ex = solve_qp_exact(qp, u);
    res.suboptimality_bound = std::max(0.0, res.objective_value - ex.objective_value);
  } else {
    // Error bound for step 1/L: ||u - u*|| <= (2L/mu) ||last step||.
    const double mu = std::max(c.mu, 1e-300);
    const double dist = (u - u0).norm() + (2.0 * c.lip / mu) * last_step.norm();
    res.suboptimality_bound = c.lip * dist * dist / (2.0 * inner_iters);
  }
  res.minimizer = std::move(u);
  return res;
}

SubproblemResult solve_qp_inexact(const BlockQP& qp, int inner_iters) {
  return solve_qp_inexact(qp, inner_iters, Vec::Zero(qp.dim()));
}

ZSolver::ZSolver(const ProblemSpec& spec, double rho) : spec_(&spec), rho_(rho) {
  const Mat K = spec.phi.P + rho * spec.Q.transpose() * spec.Q;
  llt_.compute(K);
  if (llt_.info() != Eigen::Success)
    throw RankError("z-step system is not positive definite");
}

Vec ZSolver::solve(const Vec& Ax, const Vec& w) const {
  const Mat& Q = spec_->Q;
  const Vec rhs = -(spec_->phi.q + Q.transpose() * (w + rho_ * Ax));
  return llt_.solve(rhs);
}

SubproblemResult solve_z(const ProblemSpec& spec, const Vec& x, const Vec& w, double rho) {
  check_dimensions(spec);
  if (x.size() != spec.n_x() || w.size() != spec.n_c())
    throw DimensionError("point dimensions do not match the spec");
  const Vec Ax = eval_A(spec.A, x);
  ZSolver zs(spec, rho);
  SubproblemResult res;
  res.minimizer = zs.solve(Ax, w);
  const Vec r = Ax + spec.Q * res.minimizer;
  res.objective_value = spec.phi.value(res.minimizer) + w.dot(r) + 0.5 * rho * r.squaredNorm();
  res.kkt_residual =
      (spec.phi.gradient(res.minimizer) + spec.Q.transpose() * (w + rho * r)).norm();
  res.inner_iterations = 1;
  res.suboptimality_bound =
      res.kkt_residual * res.kkt_residual / (2.0 * std::max(spec.phi.mu(), 1e-300));
  return res;
}

}  // namespace maqp
