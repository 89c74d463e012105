#include <gtest/gtest.h>

#include "maqp/builtin.hpp"
#include "maqp/errors.hpp"
#include "maqp/operator.hpp"
#include "test_util.hpp"

using namespace maqp;
using maqp::testing::RandomSpecOptions;
using maqp::testing::Rng;
using maqp::testing::Vec2;
using maqp::testing::random_spec;
using maqp::testing::set_block;

TEST(EvalA, Example22) {
  const Vec a = eval_A(example22().A, Vec2(1, 1));
  EXPECT_EQ(a, Vec2(3, 1));
}

TEST(EvalA, ConstantOperator) {
  BlockStructure b({1, 2});
  std::vector<ConstraintRow> rows{{SymmetricSparse(3, {}), Vec::Zero(3), 2.5},
                                  {SymmetricSparse(3, {}), Vec::Zero(3), -1.0}};
  MultiAffineOperator A(b, rows);
  Rng rng(1);
  for (int t = 0; t < 5; ++t) EXPECT_EQ(eval_A(A, rng.vec(3)), Vec2(2.5, -1.0));
}

TEST(EvalA, ToyRow) {
  const Vec a = eval_A(toy_q(10).A, Eigen::Vector4d(1, 2, 3, 4));
  ASSERT_EQ(a.size(), 1);
  EXPECT_EQ(a(0), 1.0 * 2.0 - 3.0 * 4.0 + 1.0);
}

TEST(EvalA, DimensionError) {
  EXPECT_THROW(eval_A(example22().A, Vec::Zero(3)), DimensionError);
}

TEST(ReduceBlock, Example22FirstBlock) {
  // Row 1: x1 x2 + x1 + 1, row 2: -x1 x2 + x2 + 1, with x2 = 3 fixed.
  const ProblemSpec s = example22();
  const BlockAffineForm f = reduce_block(s.A, Vec2(0.7, 3.0), 0);
  ASSERT_EQ(f.M.rows(), 2);
  ASSERT_EQ(f.M.cols(), 1);
  EXPECT_EQ(f.M(0, 0), 4.0);
  EXPECT_EQ(f.M(1, 0), -3.0);
  EXPECT_EQ(f.b, Vec2(1.0, 4.0));
  EXPECT_NEAR((f.M * Vec::Constant(1, 0.7) + f.b - eval_A(s.A, Vec2(0.7, 3.0))).norm(), 0, 1e-15);
}

TEST(ReduceBlock, LinearOperator) {
  Rng rng(2);
  RandomSpecOptions o;
  o.linear = true;
  const ProblemSpec s = random_spec(rng, o);
  const Vec x = rng.vec(s.n_x());
  for (Index j = 0; j < s.blocks.count(); ++j) {
    const BlockAffineForm f = reduce_block(s.A, x, j);
    const Index off = s.blocks.offset(j), n = s.blocks.size(j);
    for (Index i = 0; i < s.n_c(); ++i) {
      EXPECT_TRUE(f.M.row(i).transpose().isApprox(s.A.row(i).d.segment(off, n)));
      const Vec xz = set_block(s, x, j, Vec::Zero(n));
      EXPECT_NEAR(f.b(i), s.A.row(i).e + s.A.row(i).d.dot(xz), 1e-14);
    }
  }
}

TEST(ReduceBlock, RejectsDiagonalBlock) {
  BlockStructure b({2});
  MultiAffineOperator A(b, {{SymmetricSparse(2, {{0, 1, 1.0}}), Vec::Zero(2), 0.0}});
  EXPECT_THROW(reduce_block(A, Vec2(1, 1), 0), InvalidOperatorError);
  EXPECT_THROW(reduce_block(example22().A, Vec2(1, 1), 2), DimensionError);
}

TEST(ReduceBlock, RandomConsistency) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const ProblemSpec s = random_spec(rng);
    const Vec x = rng.vec(s.n_x(), -3, 3);
    const Vec Ax = eval_A(s.A, x);
    for (Index j = 0; j < s.blocks.count(); ++j) {
      const BlockAffineForm f = reduce_block(s.A, x, j);
      const Vec xj = x.segment(s.blocks.offset(j), s.blocks.size(j));
      EXPECT_LE((f.M * xj + f.b - Ax).norm(), 1e-12 * (1 + Ax.norm()));
      const BlockAffineForm g = reduce_block(s.A, x, j, Ax);
      EXPECT_LE((g.M - f.M).norm(), 1e-15);
      EXPECT_LE((g.M * xj + g.b - Ax).norm(), 1e-12 * (1 + Ax.norm()));
    }
  }
}

TEST(Property, BlockwiseAffinity) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const ProblemSpec s = random_spec(rng);
    const Vec x = rng.vec(s.n_x());
    for (Index j = 0; j < s.blocks.count(); ++j) {
      const Index n = s.blocks.size(j);
      const Vec u = rng.vec(n), v = rng.vec(n);
      const double a = rng.uniform(0, 1);
      const Vec lhs = eval_A(s.A, set_block(s, x, j, a * u + (1 - a) * v));
      const Vec rhs = a * eval_A(s.A, set_block(s, x, j, u)) +
                      (1 - a) * eval_A(s.A, set_block(s, x, j, v));
      EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Lagrangian, FeasiblePointWithZeroDual) {
  Rng rng(5);
  const ProblemSpec s = random_spec(rng);
  const Vec x = rng.vec(s.n_x());
  // Least-norm z with A(x) + Qz = 0.
  const Vec z = -s.Q.transpose() * (s.Q * s.Q.transpose()).ldlt().solve(eval_A(s.A, x));
  const Vec w = Vec::Zero(s.n_c());
  for (double rho : {0.5, 7.0, 300.0}) {
    const LagrangianPoint p = eval_lagrangian(s, x, z, w, rho);
    EXPECT_NEAR(p.value, s.f.value(x) + s.phi.value(z), 1e-10);
  }
}

TEST(Lagrangian, Example22Value) {
  const LagrangianPoint p = eval_lagrangian(example22(), Vec2(0, 0), Vec2(-1, -1), Vec2(0, 0), 8);
  EXPECT_EQ(p.value, 2.0);
  EXPECT_EQ(p.grad_w, Vec2(0, 0));
}

TEST(Lagrangian, InfeasibleFlaggedWithFiniteValue) {
  ProblemSpec s = example22();
  s.indicators[0] = BoxSet{Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)};
  const LagrangianPoint p = eval_lagrangian(s, Vec2(2, 0), Vec2(0, 0), Vec2(0, 0), 1);
  EXPECT_TRUE(p.infeasible);
  EXPECT_TRUE(std::isfinite(p.value));
}

namespace {

// Central differences of L along each coordinate of x, z and w.
struct FdGrad {
  Vec gx, gz, gw;
};

FdGrad finite_difference(const ProblemSpec& s, const Vec& x, const Vec& z, const Vec& w,
                         double rho) {
  const double h = 1e-6 * (1.0 + std::sqrt(x.squaredNorm() + z.squaredNorm() + w.squaredNorm()));
  auto L = [&](const Vec& xx, const Vec& zz, const Vec& ww) {
    return eval_lagrangian(s, xx, zz, ww, rho).value;
  };
  FdGrad g{Vec(x.size()), Vec(z.size()), Vec(w.size())};
  for (Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g.gx(i) = (L(a, z, w) - L(b, z, w)) / (2 * h);
  }
  for (Index i = 0; i < z.size(); ++i) {
    Vec a = z, b = z;
    a(i) += h;
    b(i) -= h;
    g.gz(i) = (L(x, a, w) - L(x, b, w)) / (2 * h);
  }
  for (Index i = 0; i < w.size(); ++i) {
    Vec a = w, b = w;
    a(i) += h;
    b(i) -= h;
    g.gw(i) = (L(x, z, a) - L(x, z, b)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Property, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const ProblemSpec s = random_spec(rng);
    for (int p = 0; p < 10; ++p) {
      const Vec x = rng.vec(s.n_x()), z = rng.vec(s.n_z()), w = rng.vec(s.n_c());
      const double rho = rng.uniform(0.1, 10);
      const LagrangianPoint lp = eval_lagrangian(s, x, z, w, rho);
      const FdGrad fd = finite_difference(s, x, z, w, rho);
      EXPECT_LE(maqp::testing::rel_err(lp.grad_x, fd.gx), 1e-6);
      EXPECT_LE(maqp::testing::rel_err(lp.grad_z, fd.gz), 1e-6);
      EXPECT_LE(maqp::testing::rel_err(lp.grad_w, fd.gw), 1e-6);
    }
  }
}

TEST(Property, LagrangianQuadraticInEachBlock) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const ProblemSpec s = random_spec(rng);
    const Vec x = rng.vec(s.n_x()), z = rng.vec(s.n_z()), w = rng.vec(s.n_c());
    const double rho = rng.uniform(0.1, 5);
    for (Index j = 0; j < s.blocks.count(); ++j) {
      const Index n = s.blocks.size(j);
      const Vec h = 0.1 * rng.vec(n);
      auto L = [&](const Vec& u) {
        return eval_lagrangian(s, set_block(s, x, j, u), z, w, rho).value;
      };
      const Vec u1 = rng.vec(n), u2 = rng.vec(n);
      const double d1 = L(u1 + 2 * h) - 2 * L(u1 + h) + L(u1);
      const double d2 = L(u2 + 2 * h) - 2 * L(u2 + h) + L(u2);
      EXPECT_NEAR(d1, d2, 1e-10 * (1 + std::abs(L(u1))));
    }
  }
}

TEST(Lagrangian, ExtendedPrecisionAgreesWithDouble) {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const ProblemSpec s = random_spec(rng);
    const Vec x = rng.vec(s.n_x()), z = rng.vec(s.n_z()), w = rng.vec(s.n_c());
    const double v = eval_lagrangian(s, x, z, w, 3.0).value;
    EXPECT_NEAR(static_cast<double>(lagrangian_extended(s, x, z, w, 3.0)), v,
                1e-12 * (1 + std::abs(v)));
  }
  const ProblemSpec b3 = appendix_b3();
  const Vec x = Vec2(0.3, -0.2), z = Vec::Constant(1, 0.1), w = Vec::Constant(1, 0.4);
  EXPECT_NEAR(static_cast<double>(lagrangian_extended(b3, x, z, w, 2.0)),
              eval_lagrangian(b3, x, z, w, 2.0).value, 1e-14);
}

TEST(Jacobian, DenseMatchesTransposeProduct) {
  Rng rng(9);
  const ProblemSpec s = random_spec(rng);
  const Vec x = rng.vec(s.n_x()), v = rng.vec(s.n_c());
  EXPECT_LE((jacobian(s.A, x).transpose() * v - jacobian_transpose_times(s.A, x, v)).norm(),
            1e-13);
}
