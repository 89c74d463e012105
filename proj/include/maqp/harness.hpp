#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maqp/admm.hpp"
#include "maqp/builtin.hpp"
#include "maqp/certificates.hpp"
#include "maqp/io.hpp"
#include "maqp/rate.hpp"

namespace maqp {

/// Uniform [-1, 1] per coordinate from a seeded generator, then projected.
Vec random_x0(const ProblemSpec& spec, std::uint64_t seed);

/// A run together with the longer, tighter reference run that defines L*.
struct Experiment {
  SolveReport main;
  long double l_star = 0.0L;
  bool has_reference = false;
  std::optional<RateFit> fit;
  std::string fit_error;
};

/// The reference run uses 10x the iterations and 1e-3x the tolerances from
/// the same start. Without it, L* is the last Lagrangian of the main run.
Experiment run_experiment(const ProblemSpec& spec, const SolverConfig& config, const Vec& x0,
                          bool reference = true, double window_fraction = 0.5);

enum class PlanKind { Solve, QSweep, RhoSweep, InexactSweep, DtSweep };

struct ProblemSource {
  std::optional<std::string> builtin;
  std::optional<std::filesystem::path> file;
  BuiltinParams params;
  bool allow_rank_deficient = false;
  /// Locomotion instance for DtSweep: a spec file, or the walking builtin when empty.
  std::optional<std::filesystem::path> locomotion_file;
};

struct ExperimentPlan {
  PlanKind kind = PlanKind::Solve;
  ProblemSource problem;
  /// q values, rho values, inner iteration counts (0 = exact), or dt values.
  std::vector<double> values;
  /// Interpret rho sweep values as multiples of auto_rho.
  bool rho_relative = false;
  SolverConfig config;
  std::filesystem::path output_dir;
  int repeats = 1;
  bool reference = true;
  double window_fraction = 0.5;
  /// Also write the problem JSON of every run.
  bool emit_problem = false;

  /// Throws PreconditionError if the plan is inconsistent.
  void check() const;
};

struct RunOutcome {
  std::string label;
  double param = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  Experiment experiment;
  std::optional<RateCertificate> rate_certificate;
  std::optional<SecondOrderCertificate> second_order;
  std::string second_order_status;
  std::optional<DtCertificate> dt_certificate;
  std::filesystem::path csv;
};

struct RunResult {
  int exit_code = 0;
  std::vector<RunOutcome> runs;
  std::filesystem::path summary;
  std::optional<std::filesystem::path> wide_csv;
};

/// Exit code 0 when every run converged, 2 if any diverged, else 3 if any
/// hit the iteration limit.
RunResult run(const ExperimentPlan& plan);

/// Wide table: k, then one gap column per run (empty past a run's end).
void write_wide_csv(const std::filesystem::path& path, const std::vector<RunOutcome>& runs);

struct FitRow {
  std::filesystem::path file;
  std::optional<RateFit> fit;
  std::string error;
};

/// Rate fit on the gap column of each CSV. Throws ParseError on malformed files.
std::vector<FitRow> fit_report(const std::vector<std::filesystem::path>& csvs,
                               double window_fraction = 0.5);
io::json fit_report_json(const std::vector<FitRow>& rows);
std::string fit_report_table(const std::vector<FitRow>& rows);

/// $MAQP_OUTPUT_DIR, or "maqp_out".
std::filesystem::path default_output_dir();

}  // namespace maqp
