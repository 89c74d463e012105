#pragma once

#include <Eigen/Cholesky>

#include <vector>

#include "maqp/errors.hpp"
#include "maqp/operator.hpp"
#include "maqp/problem.hpp"

namespace maqp {

/// 1/2 u^T H u + g^T u + c0 (+ sine terms) over u in `set`.
struct BlockQP {
  Mat H;
  Vec g;
  double c0 = 0.0;
  IndicatorSet set = FreeSet{};
  /// weight * sin^2(u_local); empty for every instance inside the theory.
  std::vector<SineSquaredTerm> sine_terms;

  double value(const Vec& u) const;
  Vec gradient(const Vec& u) const;
  Index dim() const { return g.size(); }
};

struct SubproblemResult {
  Vec minimizer;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
  double suboptimality_bound = 0.0;
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, SubproblemResult best)
      : Error(what), best_(std::move(best)) {}
  const SubproblemResult& best() const noexcept { return best_; }

 private:
  SubproblemResult best_;
};

BlockQP assemble_block_qp(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& w,
                          double rho, Index j);

/// Same QP from a precomputed block form; c0 is left at 0.
BlockQP assemble_block_qp(const ProblemSpec& spec, const Vec& x, const Vec& z, const Vec& w,
                          double rho, Index j, const BlockAffineForm& form);

/// Fixed-point residual ||u - project(S, u - grad(u))||.
double kkt_residual(const BlockQP& qp, const Vec& u);

inline constexpr int kExactIterationCap = 100000;

/// Exact minimizer. Constrained sets use accelerated projected gradient
/// warm-started at `start` (projected). Throws NotConvergedError, EmptySetError.
SubproblemResult solve_qp_exact(const BlockQP& qp, const Vec& start);
SubproblemResult solve_qp_exact(const BlockQP& qp);

/// Exactly `inner_iters` projected-gradient steps with step 1/lambda_max(H)
/// from `start`. With `certify` the bound is measured against an exact solve.
SubproblemResult solve_qp_inexact(const BlockQP& qp, int inner_iters, const Vec& start,
                                  bool certify = false);
SubproblemResult solve_qp_inexact(const BlockQP& qp, int inner_iters);

/// Factorization of P_phi + rho Q^T Q for repeated z-steps.
class ZSolver {
 public:
  ZSolver(const ProblemSpec& spec, double rho);
  /// argmin_z phi(z) + <w, Qz> + rho/2 ||Ax + Qz||^2, given Ax = A(x).
  Vec solve(const Vec& Ax, const Vec& w) const;

 private:
  const ProblemSpec* spec_;
  double rho_;
  Eigen::LLT<Mat> llt_;
};

SubproblemResult solve_z(const ProblemSpec& spec, const Vec& x, const Vec& w, double rho);

/// Euclidean projection. Throws EmptySetError for an empty polyhedron.
Vec project(const IndicatorSet& set, const Vec& v);

}  // namespace maqp
