#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

#include "maqp/problem.hpp"

namespace maqp {

using Vec3 = Eigen::Vector3d;

struct ComBounds {
  Vec3 lower = Vec3::Constant(-kInf);
  Vec3 upper = Vec3::Constant(kInf);
};

/// Centroidal momentum planning instance with a fixed contact schedule.
struct LocomotionSpec {
  double mass = 1.0;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  double dt = 0.1;
  /// T: dynamics steps. Forces exist at steps 0..T.
  int steps = 1;
  /// N: end-effectors.
  int effectors = 1;
  /// contacts[i][j] for i < T.
  std::vector<std::vector<Vec3>> contacts;
  Vec3 c_init = Vec3::Zero();
  Vec3 cdot_init = Vec3::Zero();
  Vec3 k_init = Vec3::Zero();
  /// force_sets[i][j] for i <= T, each over R^3.
  std::vector<std::vector<IndicatorSet>> force_sets;
  /// f(x) = force_weight * sum ||f_i^j||^2.
  double force_weight = 0.5;
  /// phi(z) = momentum_weight * sum ||k'_i||^2.
  double momentum_weight = 5.0;
  std::optional<ComBounds> com_bounds;

  Index force_dim() const { return 3 * static_cast<Index>(effectors) * (steps + 1); }
  /// Coordinate of component `a` of f_i^j in the stacked force vector.
  Index force_index(int i, int j, int a) const {
    return 3 * static_cast<Index>(effectors) * i + 3 * j + a;
  }

  /// Throws CompileError naming the first offending step.
  void check() const;
};

/// Contact positions held until time `until` (seconds).
struct ContactPhase {
  double until = 0.0;
  std::vector<Vec3> positions;
};

/// dt-independent description of the contact sequence.
struct GaitSchedule {
  double duration = 1.0;
  std::vector<ContactPhase> phases;
  /// One set per effector, used at every step.
  std::vector<IndicatorSet> force_sets;
};

/// Copy of `base` with dt, steps, contacts and force_sets filled from the
/// schedule. Step i uses the first phase with i*dt < until.
LocomotionSpec instantiate(LocomotionSpec base, const GaitSchedule& gait, double dt);

/// c_i = position_coef * f + position_const, and likewise for the velocity.
struct AffineCoM {
  Mat position_coef;
  Vec3 position_const;
  Mat velocity_coef;
  Vec3 velocity_const;
};

/// Affine maps for steps 0..T.
std::vector<AffineCoM> eliminate_com_states(const LocomotionSpec& loco);

struct DtCertificate {
  double dt = 0.0;
  double t_total = 0.0;
  std::array<double, 3> terms{};
  double t0 = 0.0;
  bool satisfied = false;
  double c_norm_bound = 0.0;
  double c_norm_computed = 0.0;
};

struct CompiledLocomotion {
  ProblemSpec spec;
  /// block_map[i] is the x block holding the forces of step i.
  std::vector<Index> block_map;
  /// z_map[i] are the z coordinates of k'_i.
  std::vector<std::array<Index, 3>> z_map;
  DtCertificate dt_certificate;
  /// Steps whose CoM bounds became polyhedral rows on a single block.
  std::vector<int> com_constrained_steps;
  /// Steps whose CoM bounds couple several blocks and were left out.
  std::vector<int> com_skipped_steps;
};

/// A rows hold the negated momentum increments, so Q = +I and z = [k'_0..k'_T].
CompiledLocomotion compile(const LocomotionSpec& loco);

DtCertificate dt_condition(const LocomotionSpec& loco);

/// k_i = sum_{t <= i} k'_t for i = 0..T.
std::vector<Vec3> momentum_from_z(const Vec& z);

}  // namespace maqp
