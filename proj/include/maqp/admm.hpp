#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maqp/errors.hpp"
#include "maqp/problem.hpp"
#include "maqp/subproblem.hpp"

namespace maqp {

enum class SubproblemMode { Exact, Inexact };

struct SolverConfig {
  /// Penalty; empty means auto_rho(spec) * rho_safety.
  std::optional<double> rho;
  double rho_safety = 1.0;
  int max_iter = 1000;
  /// The stopping test is skipped before this many iterations.
  int min_iter = 0;
  double tol_primal = 1e-8;
  double tol_step = 1e-8;
  double tol_kkt = 1e-8;
  SubproblemMode mode = SubproblemMode::Exact;
  int inner_iters = 10;
  /// Divergence threshold on ||w||; empty means 1e6 * (1 + ||w0||).
  std::optional<double> divergence_w_norm;
  int divergence_min_iter = 100;
  std::uint64_t seed = 0;
  /// Measure inexact block errors against an exact solve.
  bool certify_inexact = false;

  /// Throws PreconditionError if a field is out of range.
  void check() const;
};

struct IterationRecord {
  int k = 0;
  double lagrangian = 0.0;
  /// The same value before rounding; gaps are taken from this one.
  long double lagrangian_ext = 0.0L;
  bool infeasible = false;
  double primal_residual = 0.0;
  double dx = 0.0, dz = 0.0, dw = 0.0;
  double dual_identity_residual = 0.0;
  double block_kkt = 0.0;
  double subopt = 0.0;
  /// Some block solve hit its iteration cap.
  bool subproblem_warning = false;
};

struct SolverState {
  Vec x, z, w;
  double rho = 0.0;
  int k = 0;
  std::vector<IterationRecord> history;
};

enum class Termination { Converged, MaxIterReached, Diverged };
std::string to_string(Termination t);

struct SolveReport {
  SolverState state;
  Termination termination = Termination::MaxIterReached;
  double rho = 0.0;
  double w_threshold = 0.0;
  /// Per-block fixed-point residuals at the final point.
  std::vector<double> block_kkt;
  /// ||grad phi(z) + Q^T w|| at the final point.
  double z_identity_residual = 0.0;
  bool subproblem_warnings = false;
  double wall_seconds = 0.0;

  /// Throws DivergedError or MaxIterReachedError unless converged.
  void throw_if_failed() const;
};

class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::vector<IterationRecord> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const noexcept { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

class MaxIterReachedError : public Error {
 public:
  MaxIterReachedError(const std::string& what, std::vector<IterationRecord> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const noexcept { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

/// Smallest penalty for which monotone descent of L is guaranteed, times
/// `safety`. Throws RankError when Q has no positive singular value.
double auto_rho(const ProblemSpec& spec, double safety = 1.0);

/// Projects x0, sets z0 = -Q^+ A(x0) and w0 so that Q^T w0 = -grad phi(z0)
/// on the row space, and records iteration 0.
SolverState initialize(const ProblemSpec& spec, const Vec& x0, double rho);

/// One Gauss-Seidel pass over the blocks, then the z and w updates.
SolverState sweep(const ProblemSpec& spec, const SolverState& state, const SolverConfig& config);

/// Runs from x0 (zeros when empty).
SolveReport solve(const ProblemSpec& spec, const SolverConfig& config, const Vec& x0 = Vec());

/// max_j ||x_j - P_j(x_j - grad_j L)|| per block.
std::vector<double> block_kkt_residuals(const ProblemSpec& spec, const Vec& x, const Vec& z,
                                        const Vec& w, double rho);

/// Reusable solver bound to one spec; caches the z-step factorization.
class AdmmEngine {
 public:
  AdmmEngine(const ProblemSpec& spec, SolverConfig config);

  double rho() const { return rho_; }
  const SolverConfig& config() const { return config_; }
  SolverState initialize(const Vec& x0) const;
  void sweep(SolverState& state) const;
  SolveReport solve(const Vec& x0) const;

 private:
  IterationRecord record(const SolverState& s, const Vec& Ax) const;

  const ProblemSpec& spec_;
  SolverConfig config_;
  double rho_;
  ZSolver zsolver_;
};

}  // namespace maqp
