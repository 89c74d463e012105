#include <gtest/gtest.h>

#include "maqp/admm.hpp"
#include "maqp/builtin.hpp"
#include "maqp/io.hpp"
#include "maqp/locomotion.hpp"
#include "test_util.hpp"

using namespace maqp;
using maqp::testing::Rng;

namespace {

// One effector, two steps, no gravity.
LocomotionSpec tiny(double dt = 0.1) {
  LocomotionSpec l;
  l.mass = 2.0;
  l.gravity = Vec3::Zero();
  l.dt = dt;
  l.steps = 2;
  l.effectors = 1;
  l.contacts = {{Vec3(1, 0, 0)}, {Vec3(1, 0, 0)}};
  l.force_sets.assign(3, {FreeSet{}});
  return l;
}

LocomotionSpec random_instance(Rng& rng, int T, int N) {
  LocomotionSpec l;
  l.mass = rng.uniform(0.5, 3.0);
  l.dt = rng.uniform(0.01, 0.1);
  l.steps = T;
  l.effectors = N;
  l.c_init = rng.vec(3);
  l.cdot_init = rng.vec(3);
  l.k_init = rng.vec(3);
  for (int i = 0; i < T; ++i) {
    std::vector<Vec3> step;
    for (int j = 0; j < N; ++j) step.push_back(rng.vec(3));
    l.contacts.push_back(step);
  }
  l.force_sets.assign(static_cast<size_t>(T) + 1, std::vector<IndicatorSet>(N, FreeSet{}));
  return l;
}

// Explicit Euler roll-out of the centroidal dynamics; returns z = [k_0, k_1 - k_0, ...].
Vec simulate(const LocomotionSpec& l, const Vec& f) {
  Vec3 c = l.c_init, v = l.cdot_init, k = l.k_init;
  Vec z(3 * (l.steps + 1));
  z.segment<3>(0) = k;
  for (int i = 0; i < l.steps; ++i) {
    Vec3 total = Vec3::Zero(), torque = Vec3::Zero();
    for (int j = 0; j < l.effectors; ++j) {
      const Vec3 fij = f.segment<3>(l.force_index(i, j, 0));
      total += fij;
      torque += (l.contacts[i][j] - c).cross(fij);
    }
    const Vec3 dk = torque * l.dt;
    z.segment<3>(3 * (i + 1)) = dk;
    k += dk;
    c += v * l.dt;
    v += (total / l.mass + l.gravity) * l.dt;
  }
  return z;
}

}  // namespace

TEST(EliminateCom, FirstSteps) {
  LocomotionSpec l = tiny();
  l.c_init = Vec3(0.1, 0.2, 0.3);
  l.cdot_init = Vec3(1, 0, 0);
  l.gravity = Vec3(0, 0, -10);
  const auto com = eliminate_com_states(l);
  ASSERT_EQ(com.size(), 3u);
  EXPECT_EQ(com[0].position_coef.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(com[0].position_const, l.c_init);
  EXPECT_EQ(com[1].position_coef.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR((com[1].position_const - Vec3(0.2, 0.2, 0.3)).norm(), 0, 1e-15);
  EXPECT_NEAR(com[1].velocity_coef(0, 0), 0.05, 1e-15);
  EXPECT_NEAR((com[1].velocity_const - Vec3(1, 0, -1)).norm(), 0, 1e-15);
  EXPECT_NEAR(com[2].position_coef(2, 2), 0.005, 1e-15);
  EXPECT_EQ(com[2].position_coef(2, 5), 0.0);
  EXPECT_NEAR((com[2].position_const - Vec3(0.3, 0.2, 0.2)).norm(), 0, 1e-15);
  EXPECT_NEAR(com[2].velocity_coef(1, 4), 0.05, 1e-15);
}

TEST(Compile, MomentumIncrementExample) {
  const CompiledLocomotion c = compile(tiny());
  Vec f = Vec::Zero(9);
  f(2) = 2.0;
  const Vec a = eval_A(c.spec.A, f);
  // z = -A(f); k'_1 = (r_0 - c_0) x f_0 dt = (0, -0.2, 0).
  EXPECT_NEAR((-a.segment<3>(3) - Vec3(0, -0.2, 0)).norm(), 0, 1e-15);
}

TEST(Compile, StructureAndValidity) {
  LocomotionSpec l = walking_2d(0.05);
  l.k_init = Vec3(0.1, -0.2, 0.3);
  const CompiledLocomotion c = compile(l);
  const ProblemSpec& s = c.spec;
  EXPECT_EQ(s.blocks.count(), l.steps + 1);
  EXPECT_EQ(s.n_z(), 3 * (l.steps + 1));
  EXPECT_EQ(s.Q, Mat::Identity(s.n_z(), s.n_z()));
  EXPECT_TRUE(validate(s).valid()) << validate(s).summary();
  // k'_0 rows are the constant -k_init; the first increments are linear.
  for (int a = 0; a < 3; ++a) {
    EXPECT_TRUE(s.A.row(a).C.empty());
    EXPECT_EQ(s.A.row(a).d.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.A.row(a).e, -l.k_init(a));
  }
  for (int r = 0; r < 9; ++r) EXPECT_TRUE(s.A.row(r).C.empty()) << "row " << r;
  EXPECT_FALSE(s.A.row(9).C.empty());
  // Row i+1 pairs each force at step i with each force at steps <= i-2, two entries per pair.
  const int i = 5;
  for (int a = 0; a < 3; ++a)
    EXPECT_EQ(s.A.row(3 * (i + 1) + a).C.entries().size(),
              static_cast<size_t>(2 * l.effectors * l.effectors * (i - 1)));
}

TEST(Compile, ForwardSimulationOracle) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const LocomotionSpec l = random_instance(rng, 8, 2);
    const CompiledLocomotion c = compile(l);
    const Vec f = 20.0 * rng.vec(l.force_dim());
    const Vec z = simulate(l, f);
    EXPECT_LE((eval_A(c.spec.A, f) + c.spec.Q * z).norm(), 1e-10);
    const auto k = momentum_from_z(z);
    ASSERT_EQ(k.size(), static_cast<size_t>(l.steps) + 1);
    EXPECT_NEAR((k[0] - l.k_init).norm(), 0, 1e-15);
  }
}

TEST(Compile, CouplingNormBelowBound) {
  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    const LocomotionSpec l = random_instance(rng, 12, 2);
    const CompiledLocomotion c = compile(l);
    const double bound = l.effectors * l.effectors * std::pow(l.steps, 1.5) *
                         std::pow(l.dt, 3) / l.mass;
    EXPECT_LE(c.dt_certificate.c_norm_computed, bound);
    EXPECT_NEAR(c.dt_certificate.c_norm_bound, bound, 1e-15 * bound);
  }
}

TEST(Compile, CouplingNormShrinksWithDt) {
  const double a = compile(walking_2d(0.05)).dt_certificate.c_norm_computed;
  const double b = compile(walking_2d(0.025)).dt_certificate.c_norm_computed;
  EXPECT_LT(b, a);
}

TEST(Compile, Errors) {
  LocomotionSpec l = tiny();
  l.contacts.pop_back();
  try {
    compile(l);
    FAIL() << "expected CompileError";
  } catch (const CompileError& e) {
    EXPECT_EQ(e.step(), 1);
  }
  l = tiny();
  l.force_sets[2] = {BoxSet{Vec3(1, 1, 1), Vec3(0, 0, 0)}};
  try {
    compile(l);
    FAIL() << "expected CompileError";
  } catch (const CompileError& e) {
    EXPECT_EQ(e.step(), 2);
  }
  l = tiny();
  l.mass = 0.0;
  EXPECT_THROW(compile(l), CompileError);
}

TEST(Instantiate, WalkingSchedule) {
  const LocomotionSpec l = walking_2d(0.05);
  EXPECT_EQ(l.steps, 20);
  EXPECT_EQ(l.effectors, 2);
  EXPECT_EQ(l.contacts[0][0], Vec3(-0.1, 0, 0));
  EXPECT_EQ(l.contacts[4][0], Vec3(-0.1, 0, 0));
  EXPECT_EQ(l.contacts[5][0], Vec3(0.0, 0, 0));
  EXPECT_EQ(l.contacts[19][1], Vec3(0.2, 0, 0));
  EXPECT_EQ(l.force_sets.size(), 21u);
  EXPECT_THROW(walking_2d(0.3), CompileError);
}

TEST(Instantiate, DataFileMatchesBuiltin) {
  for (double dt : {0.05, 0.01}) {
    const LocomotionSpec a = io::load_locomotion(MAQP_DATA_DIR "/walk2d.json", dt);
    const LocomotionSpec b = walking_2d(dt);
    EXPECT_EQ(compile(a).spec, compile(b).spec) << "dt=" << dt;
  }
}

TEST(Compile, WalkingAutoRho) {
  EXPECT_DOUBLE_EQ(auto_rho(compile(walking_2d(0.05)).spec), 40.0);
}

TEST(ComBounds, SingleBlockStepsBecomeRows) {
  LocomotionSpec l = tiny();
  l.com_bounds = ComBounds{Vec3(-kInf, -kInf, -1.0), Vec3(kInf, kInf, 1.0)};
  const CompiledLocomotion c = compile(l);
  // Step 2 depends on f_0 only; steps 0 and 1 are constant.
  EXPECT_EQ(c.com_constrained_steps, std::vector<int>{2});
  EXPECT_TRUE(c.com_skipped_steps.empty());
  EXPECT_TRUE(std::holds_alternative<PolyhedronSet>(c.spec.indicators[0]));
  l.c_init = Vec3(0, 0, 5);
  EXPECT_THROW(compile(l), CompileError);
}
