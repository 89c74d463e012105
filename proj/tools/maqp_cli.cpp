// maqp: solve multi-affine quadratic problems, run sweeps, fit rates.

#include <algorithm>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "maqp/builtin.hpp"
#include "maqp/errors.hpp"
#include "maqp/harness.hpp"
#include "maqp/io.hpp"
#include "maqp/locomotion.hpp"

namespace fs = std::filesystem;
using namespace maqp;

namespace {

struct CommonOptions {
  std::string problem_file;
  std::string builtin_name;
  double q = 10.0, mu_x = 1.0, mu_z = 1.0;
  std::string rho = "auto";
  double rho_safety = 1.0;
  int max_iter = 1000;
  int min_iter = 0;
  double tol_primal = 1e-8, tol_step = 1e-8, tol_kkt = 1e-8;
  int inexact = 0;
  std::string out;
  std::uint64_t seed = 0;
  int repeats = 1;
  bool allow_rank_deficient = false;
  bool no_reference = false;
  double window = 0.5;
  bool emit_problem = false;
};

void add_solver_options(CLI::App* app, CommonOptions& o) {
  app->add_option("--rho", o.rho, "Penalty: 'auto' or a positive value");
  app->add_option("--rho-safety", o.rho_safety, "Multiplier on the automatic penalty");
  app->add_option("--max-iter", o.max_iter, "Iteration limit");
  app->add_option("--min-iter", o.min_iter, "Iterations run before the stopping test applies");
  app->add_option("--tol-primal", o.tol_primal, "Primal residual tolerance");
  app->add_option("--tol-step", o.tol_step, "Step norm tolerance");
  app->add_option("--tol-kkt", o.tol_kkt, "Block KKT tolerance");
  app->add_option("--inexact", o.inexact, "Projected-gradient steps per block (0 = exact)");
  app->add_option("--out", o.out, "Output directory (default $MAQP_OUTPUT_DIR or maqp_out)");
  app->add_option("--seed", o.seed, "Seed of the random starting point");
  app->add_option("--repeats", o.repeats, "Runs with seeds seed, seed+1, ...");
  app->add_option("--window", o.window, "Fraction of the gap history used by the rate fit");
  app->add_flag("--no-reference", o.no_reference, "Skip the reference run for L*");
}

void add_problem_options(CLI::App* app, CommonOptions& o) {
  app->add_option("--problem", o.problem_file, "Problem JSON file");
  app->add_option("--builtin", o.builtin_name, "Builtin problem name");
  app->add_option("--q", o.q, "Coupling coefficient of toy_q");
  app->add_option("--mu-x", o.mu_x, "Curvature of f for toy_q and appendix instances");
  app->add_option("--mu-z", o.mu_z, "Curvature of phi for toy_q and appendix instances");
  app->add_flag("--allow-rank-deficient", o.allow_rank_deficient,
                "Accept a rank-deficient Q and use pseudo-inverses");
  app->add_flag("--emit-problem", o.emit_problem, "Write each run's problem JSON");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size()) throw CLI::ValidationError("bad number in list: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("empty value list");
  return out;
}

ExperimentPlan make_plan(const CommonOptions& o) {
  ExperimentPlan p;
  if (!o.builtin_name.empty()) p.problem.builtin = o.builtin_name;
  if (!o.problem_file.empty()) p.problem.file = o.problem_file;
  p.problem.params = {o.q, o.mu_x, o.mu_z};
  p.problem.allow_rank_deficient = o.allow_rank_deficient;
  if (o.rho != "auto") {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(o.rho, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != o.rho.size() || !(v > 0.0))
      throw CLI::ValidationError("--rho must be 'auto' or a positive number");
    p.config.rho = v;
  }
  p.config.rho_safety = o.rho_safety;
  p.config.max_iter = o.max_iter;
  p.config.min_iter = o.min_iter;
  p.config.tol_primal = o.tol_primal;
  p.config.tol_step = o.tol_step;
  p.config.tol_kkt = o.tol_kkt;
  if (o.inexact > 0) {
    p.config.mode = SubproblemMode::Inexact;
    p.config.inner_iters = o.inexact;
  }
  p.config.seed = o.seed;
  p.repeats = o.repeats;
  p.reference = !o.no_reference;
  p.window_fraction = o.window;
  p.emit_problem = o.emit_problem;
  p.output_dir = o.out.empty() ? default_output_dir() : fs::path(o.out);
  return p;
}

// The problem must pass validation unless it is flagged as outside the theory.
void validate_source(const ExperimentPlan& plan) {
  if (plan.kind == PlanKind::DtSweep) return;
  BuiltinParams params = plan.problem.params;
  if (plan.kind == PlanKind::QSweep) params.q = plan.values.front();
  ProblemSpec spec = plan.problem.builtin ? builtin(*plan.problem.builtin, params).spec
                                          : io::load_problem(*plan.problem.file);
  if (plan.problem.allow_rank_deficient) spec.allow_rank_deficient = true;
  const ValidationReport rep = validate(spec);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w.message << "\n";
  if (!rep.valid()) throw PreconditionError("problem rejected by validation:\n" + rep.summary());
}

int report(const RunResult& r) {
  for (const RunOutcome& o : r.runs) {
    const SolveReport& s = o.experiment.main;
    std::cout << o.label << ": " << to_string(s.termination) << " after " << s.state.k
              << " iterations, rho=" << s.rho
              << ", primal=" << s.state.history.back().primal_residual;
    if (o.experiment.fit)
      std::cout << ", rate slope=" << o.experiment.fit->slope << " r2=" << o.experiment.fit->r2
                << (o.experiment.fit->linear() ? " (linear)" : " (not linear)");
    std::cout << "\n";
  }
  std::cout << "summary: " << r.summary.string() << "\n";
  if (r.wide_csv) std::cout << "sweep table: " << r.wide_csv->string() << "\n";
  return r.exit_code;
}

int cmd_fit(const std::string& dir, double window) {
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename() != "sweep.csv")
      csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  const auto rows = fit_report(csvs, window);
  std::cout << fit_report_table(rows);
  const fs::path out = fs::path(dir) / "fit_report.json";
  io::write_text(out, fit_report_json(rows).dump(2) + "\n");
  std::cout << "written: " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-affine quadratic ADMM solver"};
  app.require_subcommand(1);

  CommonOptions solve_o, sweep_o, loco_o, val_o;
  std::string sweep_param, sweep_values, dt_list, loco_spec, fit_dir, export_out;
  bool rho_relative = false, print_problem = false;
  double fit_window = 0.5;

  CLI::App* solve = app.add_subcommand("solve", "Solve one problem");
  add_problem_options(solve, solve_o);
  add_solver_options(solve, solve_o);

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep a parameter");
  add_problem_options(sweep, sweep_o);
  add_solver_options(sweep, sweep_o);
  sweep->add_option("--param", sweep_param, "q, rho, inexact or dt")
      ->required()
      ->check(CLI::IsMember({"q", "rho", "inexact", "dt"}));
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_flag("--rho-relative", rho_relative, "rho values are multiples of the automatic rho");
  sweep->add_option("--spec", loco_spec, "Locomotion spec for a dt sweep");

  CLI::App* loco = app.add_subcommand("locomotion", "Compile and solve locomotion problems");
  add_solver_options(loco, loco_o);
  loco->add_option("--spec", loco_spec, "Locomotion spec JSON (default: builtin walking instance)");
  loco->add_option("--dt-list", dt_list, "Comma-separated time steps")->required();
  loco->add_flag("--emit-problem", loco_o.emit_problem, "Write each compiled problem as JSON");
  loco->add_flag("--print-problem", print_problem,
                 "Print the compiled problem JSON for the first dt and exit");

  CLI::App* fit = app.add_subcommand("fit", "Fit convergence rates of CSV traces");
  fit->add_option("--in", fit_dir, "Directory of run CSVs")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--window", fit_window, "Fraction of the gap history used by the fit");

  CLI::App* val = app.add_subcommand("validate", "Check a problem against the assumptions");
  add_problem_options(val, val_o);
  val->add_option("--export", export_out, "Also write the problem JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      ExperimentPlan plan = make_plan(solve_o);
      plan.check();
      validate_source(plan);
      return report(run(plan));
    }
    if (*sweep) {
      ExperimentPlan plan = make_plan(sweep_o);
      plan.values = parse_list(sweep_values);
      plan.rho_relative = rho_relative;
      if (sweep_param == "q") plan.kind = PlanKind::QSweep;
      if (sweep_param == "rho") plan.kind = PlanKind::RhoSweep;
      if (sweep_param == "inexact") plan.kind = PlanKind::InexactSweep;
      if (sweep_param == "dt") plan.kind = PlanKind::DtSweep;
      if (!loco_spec.empty()) plan.problem.locomotion_file = loco_spec;
      plan.check();
      validate_source(plan);
      return report(run(plan));
    }
    if (*loco) {
      ExperimentPlan plan = make_plan(loco_o);
      plan.kind = PlanKind::DtSweep;
      plan.values = parse_list(dt_list);
      if (!loco_spec.empty()) plan.problem.locomotion_file = loco_spec;
      plan.check();
      if (print_problem) {
        const double dt = plan.values.front();
        const LocomotionSpec l =
            loco_spec.empty() ? walking_2d(dt) : io::load_locomotion(loco_spec, dt);
        std::cout << io::problem_to_json(compile(l).spec).dump(2) << "\n";
        return 0;
      }
      return report(run(plan));
    }
    if (*fit) return cmd_fit(fit_dir, fit_window);
    if (*val) {
      ExperimentPlan plan = make_plan(val_o);
      if (plan.problem.builtin.has_value() == plan.problem.file.has_value())
        throw PreconditionError("give exactly one of --problem or --builtin");
      ProblemSpec spec = plan.problem.builtin
                             ? builtin(*plan.problem.builtin, plan.problem.params).spec
                             : io::load_problem(*plan.problem.file);
      if (plan.problem.allow_rank_deficient) spec.allow_rank_deficient = true;
      const ValidationReport rep = validate(spec);
      std::string summary = rep.summary();
      if (!summary.empty() && summary.back() != '\n') summary += '\n';
      std::cout << summary;
      if (!export_out.empty()) io::save_problem(spec, export_out);
      return rep.valid() ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
