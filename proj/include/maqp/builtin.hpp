#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maqp/locomotion.hpp"
#include "maqp/problem.hpp"

namespace maqp {

struct BuiltinParams {
  /// Coupling coefficient of the toy problem.
  double q = 10.0;
  double mu_x = 1.0;
  double mu_z = 1.0;
};

struct BuiltinProblem {
  std::string name;
  ProblemSpec spec;
  /// Penalty to use when the automatic bound is undefined.
  std::optional<double> default_rho;
  /// Starting point prescribed by the instance, if any.
  std::optional<Vec> default_x0;
  /// Whether the monotone-descent check applies.
  bool descent_check = true;
};

/// Throws UnknownProblemError for an unrecognized name.
BuiltinProblem builtin(const std::string& name, const BuiltinParams& params = {});
std::vector<std::string> builtin_names();

ProblemSpec example22();
/// xy = 1 without a usable z; rejected unless the rank override is set.
ProblemSpec example210(bool allow_rank_deficient = false);
ProblemSpec toy_q(double q, double mu_x = 1.0, double mu_z = 1.0);
ProblemSpec appendix_b1(double mu_x = 1.0, double mu_z = 1.0);
ProblemSpec appendix_b2(double mu_x = 1.0, double mu_z = 1.0);
ProblemSpec appendix_b3(double mu_x = 1.0, double mu_z = 1.0);

/// Two-foot planar walking instance: m = 2 kg, 1 s horizon, feet stepping
/// forward every 0.25 s, force boxes per foot, weights 0.5 and 5.
LocomotionSpec walking_2d(double dt);
GaitSchedule walking_2d_gait();
LocomotionSpec walking_2d_base();

}  // namespace maqp
