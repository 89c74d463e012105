#include "maqp/builtin.hpp"

#include "maqp/errors.hpp"

namespace maqp {

namespace {

QuadraticObjective scaled_identity(Index n, double s) {
  return {s * Mat::Identity(n, n), Vec::Zero(n), 0.0};
}

std::vector<IndicatorSet> free_sets(Index n) { return std::vector<IndicatorSet>(n, FreeSet{}); }

ConstraintRow row(Index n, std::vector<SparseEntry> C, Vec d, double e) {
  return {SymmetricSparse(n, C), std::move(d), e};
}

// Two scalar blocks with x1 + x2 + z + 1 = 0.
ProblemSpec linear_pair(double mu_x, double mu_z) {
  ProblemSpec s;
  s.blocks = BlockStructure({1, 1});
  s.f = scaled_identity(2, mu_x);
  s.phi = scaled_identity(1, mu_z);
  s.indicators = free_sets(2);
  std::vector<ConstraintRow> rows;
  rows.push_back(row(2, {}, Vec::Ones(2), 1.0));
  s.A = MultiAffineOperator(s.blocks, std::move(rows));
  s.Q = Mat::Ones(1, 1);
  return s;
}

}  // namespace

ProblemSpec example22() {
  ProblemSpec s;
  s.blocks = BlockStructure({1, 1});
  s.f = scaled_identity(2, 2.0);
  s.phi = scaled_identity(2, 2.0);
  s.indicators = free_sets(2);
  std::vector<ConstraintRow> rows;
  rows.push_back(row(2, {{0, 1, 1.0}}, Vec::Unit(2, 0), 1.0));
  rows.push_back(row(2, {{0, 1, -1.0}}, Vec::Unit(2, 1), 1.0));
  s.A = MultiAffineOperator(s.blocks, std::move(rows));
  s.Q = Mat::Identity(2, 2);
  return s;
}

ProblemSpec example210(bool allow_rank_deficient) {
  ProblemSpec s;
  s.blocks = BlockStructure({1, 1});
  s.f = scaled_identity(2, 2.0);
  // A placeholder z with Q = 0; phi only keeps the z-step well posed.
  s.phi = scaled_identity(1, 2.0);
  s.indicators = free_sets(2);
  std::vector<ConstraintRow> rows;
  rows.push_back(row(2, {{0, 1, 1.0}}, Vec::Zero(2), -1.0));
  s.A = MultiAffineOperator(s.blocks, std::move(rows));
  s.Q = Mat::Zero(1, 1);
  s.allow_rank_deficient = allow_rank_deficient;
  return s;
}

ProblemSpec toy_q(double q, double mu_x, double mu_z) {
  ProblemSpec s;
  s.blocks = BlockStructure({1, 1, 1, 1});
  s.f = scaled_identity(4, mu_x);
  s.phi = scaled_identity(1, mu_z);
  s.indicators = free_sets(4);
  std::vector<ConstraintRow> rows;
  rows.push_back(row(4, {{0, 1, 1.0}, {2, 3, -1.0}}, Vec::Zero(4), 1.0));
  s.A = MultiAffineOperator(s.blocks, std::move(rows));
  s.Q = Mat::Constant(1, 1, q);
  return s;
}

ProblemSpec appendix_b1(double mu_x, double mu_z) { return toy_q(1.5, mu_x, mu_z); }

ProblemSpec appendix_b2(double mu_x, double mu_z) { return linear_pair(mu_x, mu_z); }

ProblemSpec appendix_b3(double mu_x, double mu_z) {
  ProblemSpec s = linear_pair(mu_x, mu_z);
  // mu_x/2 * 4 sin^2(x1)
  s.nonconvex_terms.push_back({0, 2.0 * mu_x});
  s.outside_theory = true;
  return s;
}

std::vector<std::string> builtin_names() {
  return {"example22", "example210", "toy_q", "appendixB1", "appendixB2", "appendixB3"};
}

BuiltinProblem builtin(const std::string& name, const BuiltinParams& p) {
  BuiltinProblem b;
  b.name = name;
  if (name == "example22") {
    b.spec = example22();
  } else if (name == "example210") {
    b.spec = example210(false);
    // The automatic penalty is undefined for Q = 0.
    b.default_rho = 1000.0;
    b.default_x0 = Vec::Unit(2, 0);
    b.descent_check = false;
  } else if (name == "toy_q") {
    b.spec = toy_q(p.q, p.mu_x, p.mu_z);
  } else if (name == "appendixB1") {
    b.spec = appendix_b1(p.mu_x, p.mu_z);
  } else if (name == "appendixB2") {
    b.spec = appendix_b2(p.mu_x, p.mu_z);
  } else if (name == "appendixB3") {
    b.spec = appendix_b3(p.mu_x, p.mu_z);
    b.descent_check = false;
  } else {
    std::string known;
    for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
    throw UnknownProblemError("unknown builtin '" + name + "' (known: " + known + ")");
  }
  return b;
}

GaitSchedule walking_2d_gait() {
  GaitSchedule g;
  g.duration = 1.0;
  g.phases = {
      {0.25, {Vec3(-0.1, 0, 0), Vec3(0.1, 0, 0)}},
      {0.50, {Vec3(0.0, 0, 0), Vec3(0.1, 0, 0)}},
      {0.75, {Vec3(0.0, 0, 0), Vec3(0.2, 0, 0)}},
      {1.00, {Vec3(0.1, 0, 0), Vec3(0.2, 0, 0)}},
  };
  const double m = 2.0, g0 = 9.81;
  const int N = 2;
  BoxSet box{Vec3(-4.0, 0.0, m * g0 / N), Vec3(4.0, 0.0, 2.0 * m * g0 / N)};
  g.force_sets.assign(N, box);
  return g;
}

LocomotionSpec walking_2d_base() {
  LocomotionSpec l;
  l.mass = 2.0;
  l.gravity = Vec3(0.0, 0.0, -9.81);
  l.c_init = Vec3(0.0, 0.0, 0.2);
  l.cdot_init = Vec3(0.1, 0.0, 0.0);
  l.k_init = Vec3::Zero();
  l.force_weight = 0.5;
  l.momentum_weight = 5.0;
  return l;
}

LocomotionSpec walking_2d(double dt) { return instantiate(walking_2d_base(), walking_2d_gait(), dt); }

}  // namespace maqp
