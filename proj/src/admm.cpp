#include "maqp/admm.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>

#include "maqp/linalg.hpp"
#include "maqp/operator.hpp"

namespace maqp {

void SolverConfig::check() const {
  if (rho && !(*rho > 0.0)) throw PreconditionError("rho must be positive");
  if (!(rho_safety > 0.0)) throw PreconditionError("rho safety factor must be positive");
  if (max_iter < 1) throw PreconditionError("max_iter must be at least 1");
  if (min_iter < 0 || min_iter > max_iter)
    throw PreconditionError("min_iter must be in [0, max_iter]");
  if (!(tol_primal > 0.0) || !(tol_step > 0.0) || !(tol_kkt > 0.0))
    throw PreconditionError("tolerances must be positive");
  if (mode == SubproblemMode::Inexact && inner_iters < 1)
    throw PreconditionError("inner_iters must be at least 1");
  if (divergence_w_norm && !(*divergence_w_norm > 0.0))
    throw PreconditionError("divergence threshold must be positive");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "Converged";
    case Termination::MaxIterReached:
      return "MaxIterReached";
    case Termination::Diverged:
      return "Diverged";
  }
  return "?";
}

void SolveReport::throw_if_failed() const {
  if (termination == Termination::Diverged)
    throw DivergedError("dual norm exceeded " + std::to_string(w_threshold) + " at k=" +
                            std::to_string(state.k),
                        state.history);
  if (termination == Termination::MaxIterReached)
    throw MaxIterReachedError("no convergence in " + std::to_string(state.k) + " iterations",
                              state.history);
}

double auto_rho(const ProblemSpec& spec, double safety) {
  const ConstantSet c = spectral_constants(spec);
  if (!(c.lambda_min_plus_QtQ > 0.0))
    throw RankError("Q has no positive singular value; the penalty bound is undefined");
  if (!(c.mu_phi > 0.0)) throw PreconditionError("phi is not strongly convex");
  const double L2 = 4.0 * c.lip_phi * c.lip_phi;
  const double a = L2 / (c.mu_phi * c.lambda_min_plus_QtQ);
  const double b = L2 / (c.mu_phi * std::sqrt(c.lambda_min_plus_QQt));
  return safety * std::max(a, b);
}

namespace {

Vec project_blocks(const ProblemSpec& spec, const Vec& x) {
  Vec out = x;
  for (Index j = 0; j < spec.blocks.count(); ++j) {
    auto seg = out.segment(spec.blocks.offset(j), spec.blocks.size(j));
    seg = project(spec.indicators[static_cast<size_t>(j)], Vec(seg));
  }
  return out;
}

std::vector<double> kkt_from_gradient(const ProblemSpec& spec, const Vec& x, const Vec& grad) {
  std::vector<double> out(static_cast<size_t>(spec.blocks.count()));
  for (Index j = 0; j < spec.blocks.count(); ++j) {
    const Index off = spec.blocks.offset(j);
    const Index nj = spec.blocks.size(j);
    const Vec xj = x.segment(off, nj);
    const Vec p = project(spec.indicators[static_cast<size_t>(j)], xj - grad.segment(off, nj));
    out[static_cast<size_t>(j)] = (xj - p).norm();
  }
  return out;
}

bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace

std::vector<double> block_kkt_residuals(const ProblemSpec& spec, const Vec& x, const Vec& z,
                                        const Vec& w, double rho) {
  const Vec r = eval_A(spec.A, x) + spec.Q * z;
  const Vec grad = spec.f_gradient(x) + jacobian_transpose_times(spec.A, x, w + rho * r);
  return kkt_from_gradient(spec, x, grad);
}

AdmmEngine::AdmmEngine(const ProblemSpec& spec, SolverConfig config)
    : spec_(spec),
      config_(std::move(config)),
      rho_(config_.rho ? *config_.rho : auto_rho(spec, config_.rho_safety)),
      zsolver_(spec, rho_) {
  config_.check();
  check_dimensions(spec);
}

IterationRecord AdmmEngine::record(const SolverState& s, const Vec& Ax) const {
  IterationRecord rec;
  rec.k = s.k;
  const Vec r = Ax + spec_.Q * s.z;
  rec.primal_residual = r.norm();
  rec.lagrangian_ext = lagrangian_extended(spec_, s.x, s.z, s.w, rho_);
  rec.lagrangian = static_cast<double>(rec.lagrangian_ext);
  rec.infeasible = !spec_.x_feasible(s.x);
  const Vec gphi = spec_.phi.gradient(s.z);
  rec.dual_identity_residual = (spec_.Q.transpose() * s.w + gphi).norm();
  const Vec grad = spec_.f_gradient(s.x) + jacobian_transpose_times(spec_.A, s.x, s.w + rho_ * r);
  double kkt = 0.0;
  for (double v : kkt_from_gradient(spec_, s.x, grad)) kkt = std::max(kkt, v);
  rec.block_kkt = kkt;
  return rec;
}

SolverState AdmmEngine::initialize(const Vec& x0) const {
  SolverState s;
  const Vec xin = x0.size() == 0 ? Vec(Vec::Zero(spec_.n_x())) : x0;
  if (xin.size() != spec_.n_x())
    throw DimensionError("x0 has length " + std::to_string(xin.size()) + ", expected " +
                         std::to_string(spec_.n_x()));
  s.x = project_blocks(spec_, xin);
  s.rho = rho_;
  const Vec Ax = eval_A(spec_.A, s.x);
  const Mat& Q = spec_.Q;
  const Vec sv = linalg::singular_values(Q);
  const bool full_row_rank = spec_.n_c() == 0 || linalg::numerical_rank(sv) == spec_.n_c();
  if (full_row_rank) {
    const Eigen::LDLT<Mat> K((Q * Q.transpose()).eval());
    s.z = -Q.transpose() * K.solve(Ax);
    s.w = -K.solve(Q * spec_.phi.gradient(s.z));
  } else {
    if (!spec_.allow_rank_deficient)
      throw RankError("Q is not full row rank; set the rank-deficiency override to proceed");
    const Mat Qp = linalg::pseudo_inverse(Q);
    s.z = -Qp * Ax;
    s.w = -Qp.transpose() * spec_.phi.gradient(s.z);
  }
  s.k = 0;
  s.history.push_back(record(s, Ax));
  return s;
}

void AdmmEngine::sweep(SolverState& s) const {
  const Vec x_old = s.x;
  const Vec z_old = s.z;
  const Vec w_old = s.w;
  Vec Ax = eval_A(spec_.A, s.x);
  double subopt = 0.0;
  bool warning = false;
  for (Index j = 0; j < spec_.blocks.count(); ++j) {
    const Index off = spec_.blocks.offset(j);
    const Index nj = spec_.blocks.size(j);
    const BlockAffineForm form = reduce_block(spec_.A, s.x, j, Ax);
    const BlockQP qp = assemble_block_qp(spec_, s.x, s.z, s.w, rho_, j, form);
    const Vec xj = s.x.segment(off, nj);
    SubproblemResult res;
    if (config_.mode == SubproblemMode::Exact) {
      try {
        res = solve_qp_exact(qp, xj);
      } catch (const NotConvergedError& e) {
        res = e.best();
        warning = true;
      }
    } else {
      res = solve_qp_inexact(qp, config_.inner_iters, xj, config_.certify_inexact);
    }
    s.x.segment(off, nj) = res.minimizer;
    for (Index r : form.active_rows) Ax(r) = form.b(r) + form.M.row(r).dot(res.minimizer);
    subopt += res.suboptimality_bound;
  }
  // Fresh evaluation keeps A(x) free of accumulated update error.
  Ax = eval_A(spec_.A, s.x);
  s.z = zsolver_.solve(Ax, s.w);
  const Vec r = Ax + spec_.Q * s.z;
  s.w = s.w + rho_ * r;
  s.k += 1;

  IterationRecord rec = record(s, Ax);
  rec.dx = (s.x - x_old).norm();
  rec.dz = (s.z - z_old).norm();
  rec.dw = (s.w - w_old).norm();
  rec.subopt = subopt;
  rec.subproblem_warning = warning;
  s.history.push_back(rec);
}

SolveReport AdmmEngine::solve(const Vec& x0) const {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.rho = rho_;
  rep.state = initialize(x0);
  SolverState& s = rep.state;
  rep.w_threshold = config_.divergence_w_norm ? *config_.divergence_w_norm
                                              : 1e6 * (1.0 + s.w.norm());
  rep.termination = Termination::MaxIterReached;
  for (int it = 0; it < config_.max_iter; ++it) {
    sweep(s);
    const IterationRecord& rec = s.history.back();
    rep.subproblem_warnings = rep.subproblem_warnings || rec.subproblem_warning;
    if (!finite(s.x) || !finite(s.z) || !finite(s.w)) {
      rep.termination = Termination::Diverged;
      break;
    }
    if (s.k >= config_.divergence_min_iter && s.w.norm() >= rep.w_threshold) {
      rep.termination = Termination::Diverged;
      break;
    }
    const double step = std::sqrt(rec.dx * rec.dx + rec.dz * rec.dz + rec.dw * rec.dw);
    if (s.k >= config_.min_iter && rec.primal_residual <= config_.tol_primal &&
        step <= config_.tol_step &&
        rec.block_kkt <= config_.tol_kkt) {
      rep.termination = Termination::Converged;
      break;
    }
  }
  rep.block_kkt = block_kkt_residuals(spec_, s.x, s.z, s.w, rho_);
  rep.z_identity_residual = s.history.back().dual_identity_residual;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

SolverState initialize(const ProblemSpec& spec, const Vec& x0, double rho) {
  SolverConfig cfg;
  cfg.rho = rho;
  return AdmmEngine(spec, cfg).initialize(x0);
}

SolverState sweep(const ProblemSpec& spec, const SolverState& state, const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.rho = state.rho;
  SolverState next = state;
  AdmmEngine(spec, cfg).sweep(next);
  return next;
}

SolveReport solve(const ProblemSpec& spec, const SolverConfig& config, const Vec& x0) {
  return AdmmEngine(spec, config).solve(x0);
}

}  // namespace maqp
