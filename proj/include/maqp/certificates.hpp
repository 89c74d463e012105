#pragma once

#include "maqp/admm.hpp"
#include "maqp/problem.hpp"

namespace maqp {

/// Sufficient condition on ||C|| for a linear rate, as a ratio lhs / rhs.
struct RateCertificate {
  double lhs = 0.0;
  double rhs = 0.0;
  /// lhs / rhs; 0 when lhs is 0.
  double ratio = 0.0;
  bool satisfied = false;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
};

RateCertificate check_linear_rate_condition(const ProblemSpec& spec, const Vec& x0);

struct SecondOrderCertificate {
  double reduced_hessian_min_eig = 0.0;
  bool positive_definite = false;
  double tolerance = 1e-9;
};

/// Minimum eigenvalue of
///   hess f(x) + sum_i w_i C_i + J^T (Q P_phi^{-1} Q^T)^{-1} J
/// at the state. Throws PreconditionError if the primal residual exceeds
/// `primal_tol`, InconclusiveActiveSetError if any indicator constraint is
/// within `active_tol` of being active.
SecondOrderCertificate certify_local_minimum(const ProblemSpec& spec, const SolverState& state,
                                             double primal_tol = 1e-6,
                                             double active_tol = 1e-8);

/// The matrix used by certify_local_minimum.
Mat reduced_hessian(const ProblemSpec& spec, const Vec& x, const Vec& w);

}  // namespace maqp
