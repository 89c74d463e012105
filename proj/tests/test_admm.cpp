#include <gtest/gtest.h>

#include "maqp/admm.hpp"
#include "maqp/builtin.hpp"
#include "test_util.hpp"

using namespace maqp;
using maqp::testing::RandomSpecOptions;
using maqp::testing::Rng;
using maqp::testing::Vec2;
using maqp::testing::random_spec;

TEST(AutoRho, Examples) {
  EXPECT_DOUBLE_EQ(auto_rho(example22()), 8.0);
  ProblemSpec s = example22();
  s.phi.P *= 3.0;
  EXPECT_DOUBLE_EQ(auto_rho(s), 24.0);
  s = example22();
  s.Q *= 2.0;
  EXPECT_DOUBLE_EQ(auto_rho(s), 4.0);
  EXPECT_DOUBLE_EQ(auto_rho(example22(), 2.5), 20.0);
  EXPECT_THROW(auto_rho(example210(true)), RankError);
}

TEST(Initialize, Example22) {
  const SolverState s = initialize(example22(), Vec2(0, 0), 8.0);
  EXPECT_EQ(s.k, 0);
  EXPECT_NEAR((s.z - Vec2(-1, -1)).norm(), 0, 1e-15);
  EXPECT_NEAR((s.w - Vec2(2, 2)).norm(), 0, 1e-15);
  ASSERT_EQ(s.history.size(), 1u);
  EXPECT_NEAR(s.history[0].primal_residual, 0, 1e-15);
}

TEST(Property, InitialPointIsFeasibleAndSatisfiesDualIdentity) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const ProblemSpec s = random_spec(rng);
    const SolverState st = initialize(s, rng.vec(s.n_x(), -2, 2), 1.0);
    EXPECT_LE(st.history[0].primal_residual, 1e-10);
    // A wide Q only admits the identity on its row space at k = 0.
    const Vec r = s.Q.transpose() * st.w + s.phi.gradient(st.z);
    EXPECT_LE((s.Q * r).norm(), 1e-10 * (1 + st.w.norm()));
  }
}

TEST(Initialize, RankDeficientNeedsOverride) {
  EXPECT_THROW(initialize(example210(false), Vec2(1, 0), 10.0), RankError);
  EXPECT_NO_THROW(initialize(example210(true), Vec2(1, 0), 10.0));
}

TEST(Sweep, FixedPointIsStationary) {
  const ProblemSpec s = toy_q(10.0);
  SolverState st;
  st.x = Vec::Zero(4);
  st.z = Vec::Constant(1, -0.1);
  st.w = Vec::Constant(1, 0.01);
  st.rho = auto_rho(s);
  const SolverState next = sweep(s, st, SolverConfig{});
  EXPECT_LE((next.x - st.x).norm(), 1e-15);
  EXPECT_LE((next.z - st.z).norm(), 1e-15);
  EXPECT_LE((next.w - st.w).norm(), 1e-15);
  EXPECT_EQ(next.k, 1);
}

TEST(Sweep, DescentOnExample22) {
  const ProblemSpec s = example22();
  SolverConfig cfg;
  cfg.max_iter = 50;
  const SolveReport r = solve(s, cfg, Vec2(1.5, -2.0));
  const auto& h = r.state.history;
  for (size_t k = 1; k < h.size(); ++k)
    EXPECT_LE(h[k].lagrangian, h[k - 1].lagrangian + 1e-9) << "k=" << k;
}

namespace {

// Plain Gauss-Seidel ADMM on min f(x) + phi(z) s.t. Dx + e + Qz = 0, dense.
struct LinearAdmm {
  Mat P, D, Q, Pphi;
  Vec q, e, qphi;
  std::vector<Index> off, size;
  double rho;
  Vec x, z, w;

  LinearAdmm(const ProblemSpec& s, const Vec& x0, double rho_) : rho(rho_) {
    P = s.f.P;
    q = s.f.q;
    Pphi = s.phi.P;
    qphi = s.phi.q;
    Q = s.Q;
    D.resize(s.n_c(), s.n_x());
    e.resize(s.n_c());
    for (Index i = 0; i < s.n_c(); ++i) {
      D.row(i) = s.A.row(i).d.transpose();
      e(i) = s.A.row(i).e;
    }
    for (Index j = 0; j < s.blocks.count(); ++j) {
      off.push_back(s.blocks.offset(j));
      size.push_back(s.blocks.size(j));
    }
    x = x0;
    const Mat QQt = Q * Q.transpose();
    z = -Q.transpose() * QQt.inverse() * (D * x + e);
    w = -QQt.inverse() * Q * (Pphi * z + qphi);
  }

  void step() {
    for (size_t j = 0; j < off.size(); ++j) {
      const Index o = off[j], n = size[j];
      Vec x_rest = x;
      x_rest.segment(o, n).setZero();
      const Mat Dj = D.middleCols(o, n);
      const Vec c = D * x_rest + e + Q * z;
      const Mat H = P.block(o, o, n, n) + rho * Dj.transpose() * Dj;
      const Vec g = P.middleRows(o, n) * x_rest + q.segment(o, n) + Dj.transpose() * (w + rho * c);
      x.segment(o, n) = H.llt().solve(-g);
    }
    const Vec Dx = D * x + e;
    z = (Pphi + rho * Q.transpose() * Q).llt().solve(-(qphi + Q.transpose() * (w + rho * Dx)));
    w += rho * (Dx + Q * z);
  }
};

}  // namespace

TEST(LinearCase, MatchesTextbookAdmm) {
  Rng rng(2);
  for (int t = 0; t < 3; ++t) {
    RandomSpecOptions o;
    o.linear = true;
    const ProblemSpec s = random_spec(rng, o);
    const Vec x0 = rng.vec(s.n_x());
    SolverConfig cfg;
    cfg.rho = 2.0;
    AdmmEngine eng(s, cfg);
    SolverState st = eng.initialize(x0);
    LinearAdmm ref(s, x0, 2.0);
    EXPECT_LE((st.z - ref.z).norm(), 1e-12);
    EXPECT_LE((st.w - ref.w).norm(), 1e-12);
    for (int k = 0; k < 100; ++k) {
      eng.sweep(st);
      ref.step();
      ASSERT_LE((st.x - ref.x).norm(), 1e-12 * (1 + ref.x.norm())) << "k=" << k;
      ASSERT_LE((st.z - ref.z).norm(), 1e-12 * (1 + ref.z.norm())) << "k=" << k;
      ASSERT_LE((st.w - ref.w).norm(), 1e-12 * (1 + ref.w.norm())) << "k=" << k;
    }
  }
}

TEST(Solve, Deterministic) {
  const ProblemSpec s = toy_q(2.0);
  SolverConfig cfg;
  cfg.max_iter = 40;
  const Eigen::Vector4d x0(0.3, -0.6, 0.9, 0.1);
  const SolveReport a = solve(s, cfg, x0), b = solve(s, cfg, x0);
  ASSERT_EQ(a.state.history.size(), b.state.history.size());
  for (size_t k = 0; k < a.state.history.size(); ++k)
    EXPECT_EQ(a.state.history[k].lagrangian, b.state.history[k].lagrangian);
  EXPECT_EQ(a.state.x, b.state.x);
}

TEST(Solve, ToyLimitIsAnalyticOptimum) {
  const double q = 10.0;
  const ProblemSpec s = toy_q(q);
  const SolveReport r = solve(s, SolverConfig{}, Eigen::Vector4d(0.5, -0.3, 0.8, 0.2));
  ASSERT_EQ(r.termination, Termination::Converged);
  EXPECT_LE(r.state.x.norm(), 1e-6);
  EXPECT_NEAR(r.state.z(0), -1.0 / q, 1e-6);
  EXPECT_NEAR(r.state.w(0), 1.0 / (q * q), 1e-6);
  EXPECT_NO_THROW(r.throw_if_failed());
}

TEST(Solve, Example210Diverges) {
  SolverConfig cfg;
  cfg.rho = 1000.0;
  cfg.max_iter = 5000;
  const ProblemSpec s = example210(true);
  const SolveReport r = solve(s, cfg, Vec2(1, 0));
  EXPECT_EQ(r.termination, Termination::Diverged);
  EXPECT_THROW(r.throw_if_failed(), DivergedError);
}

TEST(Solve, MaxIterReported) {
  SolverConfig cfg;
  cfg.max_iter = 3;
  const ProblemSpec s = example22();
  const SolveReport r = solve(s, cfg, Vec2(2, 2));
  EXPECT_EQ(r.termination, Termination::MaxIterReached);
  EXPECT_EQ(r.state.k, 3);
  try {
    r.throw_if_failed();
    FAIL() << "expected MaxIterReachedError";
  } catch (const MaxIterReachedError& e) {
    EXPECT_EQ(e.history().size(), 4u);
  }
}

TEST(Solve, MinIterDelaysStopping) {
  const ProblemSpec s = toy_q(10.0);
  SolverConfig cfg;
  const Eigen::Vector4d x0(0.5, -0.3, 0.8, 0.2);
  const int natural = solve(s, cfg, x0).state.k;
  cfg.min_iter = natural + 15;
  const SolveReport r = solve(s, cfg, x0);
  EXPECT_EQ(r.termination, Termination::Converged);
  EXPECT_EQ(r.state.k, natural + 15);
}

TEST(SolverConfig, Check) {
  SolverConfig c;
  EXPECT_NO_THROW(c.check());
  c.rho = -1.0;
  EXPECT_THROW(c.check(), PreconditionError);
  c = SolverConfig{};
  c.min_iter = c.max_iter + 1;
  EXPECT_THROW(c.check(), PreconditionError);
  c = SolverConfig{};
  c.tol_kkt = 0.0;
  EXPECT_THROW(c.check(), PreconditionError);
  c = SolverConfig{};
  c.mode = SubproblemMode::Inexact;
  c.inner_iters = 0;
  EXPECT_THROW(c.check(), PreconditionError);
}

TEST(Property, DualIdentityAfterEveryIteration) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const ProblemSpec s = random_spec(rng);
    SolverConfig cfg;
    cfg.max_iter = 30;
    const SolveReport r = solve(s, cfg, rng.vec(s.n_x()));
    for (size_t k = 1; k < r.state.history.size(); ++k)
      EXPECT_LE(r.state.history[k].dual_identity_residual, 1e-9 * (1 + r.state.w.norm()));
  }
}

TEST(BlockKkt, ZeroAtToyOptimum) {
  const ProblemSpec s = toy_q(10.0);
  const auto k = block_kkt_residuals(s, Vec::Zero(4), Vec::Constant(1, -0.1),
                                     Vec::Constant(1, 0.01), 0.08);
  ASSERT_EQ(k.size(), 4u);
  for (double v : k) EXPECT_LE(v, 1e-15);
}

TEST(Inexact, MoreInnerStepsTrackExactSweeps) {
  // Multi-dimensional boxed blocks, where a single projected-gradient step is not exact.
  Rng rng(5);
  RandomSpecOptions o;
  o.blocks = 3;
  o.max_block = 4;
  ProblemSpec s = random_spec(rng, o);
  for (Index j = 0; j < s.blocks.count(); ++j)
    s.indicators[j] = BoxSet{Vec::Constant(s.blocks.size(j), -0.5), Vec::Constant(s.blocks.size(j), 0.5)};
  const Vec x0 = Vec::Zero(s.n_x());
  SolverConfig exact;
  exact.max_iter = exact.min_iter = 30;
  const Vec xe = solve(s, exact, x0).state.x;
  double prev = kInf;
  for (int inner : {1, 5, 50, 500}) {
    SolverConfig cfg = exact;
    cfg.mode = SubproblemMode::Inexact;
    cfg.inner_iters = inner;
    const double d = (solve(s, cfg, x0).state.x - xe).norm();
    EXPECT_LE(d, prev + 1e-12) << "inner=" << inner;
    prev = d;
  }
  EXPECT_LE(prev, 1e-6);
}
