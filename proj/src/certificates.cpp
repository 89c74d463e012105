#include "maqp/certificates.hpp"

#include <Eigen/Cholesky>

#include <cmath>

#include "maqp/linalg.hpp"
#include "maqp/operator.hpp"

namespace maqp {

RateCertificate check_linear_rate_condition(const ProblemSpec& spec, const Vec& x0) {
  if (x0.size() != spec.n_x()) throw DimensionError("x0 length does not match the spec");
  const ConstantSet c = spectral_constants(spec);
  const double nc = static_cast<double>(spec.n_c());
  const double nx0 = x0.norm();
  const double xf = spec.f.minimizer().norm();
  const double zphi = spec.phi.minimizer().norm();
  const double num = c.mu_f * std::sqrt(c.mu_phi);
  const double lphi32 = std::sqrt(std::pow(c.lip_phi, 3) * nc * nc);

  RateCertificate rc;
  rc.m1 = num / (std::sqrt(nc) * c.lip_phi *
                 (std::sqrt(c.lip_f) * (xf + nx0) + std::sqrt(c.lip_phi) * zphi));
  rc.m2 = num / (lphi32 * (nx0 * c.norm_d + c.norm_e));
  rc.m3 = std::sqrt(num / (lphi32 * nx0 * nx0));

  const double q = c.norm_QQt_inv_Q;
  const double t1 = rc.m1;
  const double t2 = rc.m2 * std::sqrt(c.lambda_min_QQt);
  const double t3 = rc.m3 * std::pow(c.lambda_min_QQt, 0.25) * std::sqrt(q);
  double m = kInf;
  for (double t : {t1, t2, t3})
    if (!std::isnan(t)) m = std::min(m, t);
  // Without full row rank the bound degenerates to zero.
  rc.rhs = std::isfinite(q) ? m / q : 0.0;
  rc.lhs = c.norm_C;
  if (rc.lhs == 0.0)
    rc.ratio = 0.0;
  else
    rc.ratio = rc.lhs / rc.rhs;
  rc.satisfied = rc.ratio <= 1.0;
  return rc;
}

Mat reduced_hessian(const ProblemSpec& spec, const Vec& x, const Vec& w) {
  Mat H = spec.f_hessian(x);
  for (Index i = 0; i < spec.n_c(); ++i) {
    if (w(i) == 0.0) continue;
    for (const auto& e : spec.A.row(i).C.entries()) {
      H(e.row, e.col) += w(i) * e.value;
      if (e.row != e.col) H(e.col, e.row) += w(i) * e.value;
    }
  }
  const Mat J = jacobian(spec.A, x);
  const Mat& Q = spec.Q;
  const Mat S = Q * spec.phi.P.llt().solve(Q.transpose());
  const Eigen::LDLT<Mat> Sf(S);
  if (Sf.info() != Eigen::Success || !(Sf.vectorD().array() > 0.0).all())
    throw RankError("Q P_phi^{-1} Q^T is not invertible");
  H += J.transpose() * Sf.solve(J);
  return 0.5 * (H + H.transpose());
}

SecondOrderCertificate certify_local_minimum(const ProblemSpec& spec, const SolverState& state,
                                             double primal_tol, double active_tol) {
  const double res = (eval_A(spec.A, state.x) + spec.Q * state.z).norm();
  if (res > primal_tol)
    throw PreconditionError("primal residual " + std::to_string(res) + " exceeds " +
                            std::to_string(primal_tol));
  for (Index j = 0; j < spec.blocks.count(); ++j) {
    const Vec xj = state.x.segment(spec.blocks.offset(j), spec.blocks.size(j));
    const auto& set = spec.indicators[static_cast<size_t>(j)];
    bool active = false;
    if (const auto* b = std::get_if<BoxSet>(&set)) {
      for (Index i = 0; i < xj.size(); ++i)
        if (xj(i) - b->lower(i) <= active_tol || b->upper(i) - xj(i) <= active_tol) active = true;
    } else if (const auto* p = std::get_if<PolyhedronSet>(&set)) {
      if (p->G.rows() > 0 && ((p->G * xj - p->h).array() >= -active_tol).any()) active = true;
    }
    if (active)
      throw InconclusiveActiveSetError("an indicator constraint is active in block " +
                                       std::to_string(j));
  }
  SecondOrderCertificate cert;
  cert.reduced_hessian_min_eig = linalg::min_eigenvalue(reduced_hessian(spec, state.x, state.w));
  cert.positive_definite = cert.reduced_hessian_min_eig > cert.tolerance;
  return cert;
}

}  // namespace maqp
