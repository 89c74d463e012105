#include "maqp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "maqp/errors.hpp"
#include "maqp/locomotion.hpp"
#include "maqp/subproblem.hpp"

namespace fs = std::filesystem;

namespace maqp {

Vec random_x0(const ProblemSpec& spec, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Vec x(spec.n_x());
  // Spelled out so the stream does not depend on the standard library.
  for (Index i = 0; i < x.size(); ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    x(i) = 2.0 * u - 1.0;
  }
  for (Index j = 0; j < spec.blocks.count(); ++j) {
    const Index off = spec.blocks.offset(j), n = spec.blocks.size(j);
    x.segment(off, n) = project(spec.indicators[j], x.segment(off, n));
  }
  return x;
}

namespace {

// Tightened tolerances can sit below the roundoff floor of a problem, so the
// reference run also stops once the iterates stop moving.
std::optional<long double> reference_value(const ProblemSpec& spec, const SolverConfig& rc,
                                      const Vec& x0) {
  constexpr double kStallStep = 1e-14;
  constexpr int kStallIters = 10;
  AdmmEngine engine(spec, rc);
  SolverState s = engine.initialize(x0);
  const double w_threshold = rc.divergence_w_norm ? *rc.divergence_w_norm
                                                  : 1e6 * (1.0 + s.w.norm());
  int stalled = 0;
  for (int it = 0; it < rc.max_iter; ++it) {
    engine.sweep(s);
    if (!s.x.allFinite() || !s.z.allFinite() || !s.w.allFinite()) return std::nullopt;
    if (s.k >= rc.divergence_min_iter && s.w.norm() >= w_threshold) return std::nullopt;
    const IterationRecord& r = s.history.back();
    const double step = std::sqrt(r.dx * r.dx + r.dz * r.dz + r.dw * r.dw);
    if (s.k >= rc.min_iter && r.primal_residual <= rc.tol_primal && step <= rc.tol_step &&
        r.block_kkt <= rc.tol_kkt)
      break;
    const double scale = 1.0 + std::sqrt(s.x.squaredNorm() + s.z.squaredNorm() + s.w.squaredNorm());
    stalled = step <= kStallStep * scale ? stalled + 1 : 0;
    if (stalled >= kStallIters) break;
  }
  return s.history.back().lagrangian_ext;
}

}  // namespace

Experiment run_experiment(const ProblemSpec& spec, const SolverConfig& config, const Vec& x0,
                          bool reference, double window_fraction) {
  Experiment e;
  AdmmEngine engine(spec, config);
  e.main = engine.solve(x0);
  e.l_star = e.main.state.history.back().lagrangian_ext;
  if (reference && e.main.termination != Termination::Diverged) {
    SolverConfig rc = config;
    rc.rho = engine.rho();
    rc.max_iter = config.max_iter * 10;
    rc.tol_primal = config.tol_primal * 1e-3;
    rc.tol_step = config.tol_step * 1e-3;
    rc.tol_kkt = config.tol_kkt * 1e-3;
    if (auto l = reference_value(spec, rc, x0)) {
      e.l_star = *l;
      e.has_reference = true;
    }
  }
  try {
    e.fit = estimate_rate(e.main.state.history, e.l_star, window_fraction);
  } catch (const Error& ex) {
    e.fit_error = ex.what();
  }
  return e;
}

void ExperimentPlan::check() const {
  config.check();
  if (repeats < 1) throw PreconditionError("repeats must be at least 1");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw PreconditionError("window fraction must be in (0, 1]");
  if (kind != PlanKind::Solve && values.empty())
    throw PreconditionError("a sweep needs at least one value");
  if (kind == PlanKind::DtSweep) {
    for (double v : values)
      if (!(v > 0.0)) throw PreconditionError("dt values must be positive");
    return;
  }
  if (problem.builtin.has_value() == problem.file.has_value())
    throw PreconditionError("give exactly one of a problem file or a builtin name");
  if (kind == PlanKind::QSweep && problem.builtin != std::string("toy_q"))
    throw PreconditionError("a q sweep needs the toy_q builtin");
  if (kind == PlanKind::RhoSweep)
    for (double v : values)
      if (!(v > 0.0)) throw PreconditionError("rho values must be positive");
  if (kind == PlanKind::InexactSweep)
    for (double v : values)
      if (v < 0.0 || v != std::floor(v))
        throw PreconditionError("inner iteration counts must be non-negative integers");
}

namespace {

std::string param_name(PlanKind k) {
  switch (k) {
    case PlanKind::QSweep: return "q";
    case PlanKind::RhoSweep: return "rho";
    case PlanKind::InexactSweep: return "inner";
    case PlanKind::DtSweep: return "dt";
    case PlanKind::Solve: break;
  }
  return "";
}

std::string short_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

struct Task {
  std::string label;
  double param = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  ProblemSpec spec;
  SolverConfig config;
  Vec x0;
  std::optional<DtCertificate> dt_certificate;
  fs::path csv;
};

struct Instance {
  ProblemSpec spec;
  std::optional<double> default_rho;
  std::optional<Vec> default_x0;
  std::string name;
};

Instance load_instance(const ProblemSource& src, const BuiltinParams& params) {
  Instance inst;
  if (src.builtin) {
    BuiltinProblem b = builtin(*src.builtin, params);
    inst.spec = std::move(b.spec);
    inst.default_rho = b.default_rho;
    inst.default_x0 = b.default_x0;
    inst.name = b.name;
  } else {
    inst.spec = io::load_problem(*src.file);
    inst.name = src.file->stem().string();
  }
  if (src.allow_rank_deficient) inst.spec.allow_rank_deficient = true;
  return inst;
}

Vec projected_zero(const ProblemSpec& spec) {
  Vec x = Vec::Zero(spec.n_x());
  for (Index j = 0; j < spec.blocks.count(); ++j) {
    const Index off = spec.blocks.offset(j), n = spec.blocks.size(j);
    x.segment(off, n) = project(spec.indicators[j], x.segment(off, n));
  }
  return x;
}

std::vector<Task> build_tasks(const ExperimentPlan& plan, const fs::path& out) {
  std::vector<Task> tasks;
  const bool sweep = plan.kind != PlanKind::Solve;
  const std::vector<double> values = sweep ? plan.values : std::vector<double>{0.0};
  const std::string pname = param_name(plan.kind);

  for (double v : values) {
    for (int r = 0; r < plan.repeats; ++r) {
      Task t;
      t.param = v;
      t.repeat = r;
      t.seed = plan.config.seed + static_cast<std::uint64_t>(r);
      t.config = plan.config;
      t.config.seed = t.seed;
      std::string name;
      bool locomotion = false;

      if (plan.kind == PlanKind::DtSweep) {
        const LocomotionSpec loco = plan.problem.locomotion_file
                                        ? io::load_locomotion(*plan.problem.locomotion_file, v)
                                        : walking_2d(v);
        CompiledLocomotion c = compile(loco);
        t.spec = std::move(c.spec);
        t.dt_certificate = c.dt_certificate;
        name = plan.problem.locomotion_file ? plan.problem.locomotion_file->stem().string()
                                            : std::string("walk2d");
        locomotion = true;
      } else {
        BuiltinParams params = plan.problem.params;
        if (plan.kind == PlanKind::QSweep) params.q = v;
        Instance inst = load_instance(plan.problem, params);
        t.spec = std::move(inst.spec);
        name = inst.name;
        if (!t.config.rho && inst.default_rho) t.config.rho = inst.default_rho;
        if (inst.default_x0) t.x0 = *inst.default_x0;
        if (plan.kind == PlanKind::RhoSweep)
          t.config.rho = plan.rho_relative ? v * auto_rho(t.spec, 1.0) : v;
        if (plan.kind == PlanKind::InexactSweep) {
          if (v == 0.0) {
            t.config.mode = SubproblemMode::Exact;
          } else {
            t.config.mode = SubproblemMode::Inexact;
            t.config.inner_iters = static_cast<int>(v);
          }
        }
      }
      if (t.x0.size() == 0)
        t.x0 = (locomotion && r == 0) ? projected_zero(t.spec) : random_x0(t.spec, t.seed);

      t.label = name;
      if (sweep) t.label += "_" + pname + short_double(v);
      if (plan.repeats > 1) t.label += "_r" + std::to_string(r);
      t.csv = out / (t.label + ".csv");
      if (plan.emit_problem) io::save_problem(t.spec, out / (t.label + ".problem.json"));
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

RunOutcome execute(const Task& t, const ExperimentPlan& plan) {
  RunOutcome o;
  o.label = t.label;
  o.param = t.param;
  o.repeat = t.repeat;
  o.seed = t.seed;
  o.dt_certificate = t.dt_certificate;
  o.csv = t.csv;
  o.experiment = run_experiment(t.spec, t.config, t.x0, plan.reference, plan.window_fraction);
  io::write_history_csv(t.csv, o.experiment.main.state.history, o.experiment.l_star);

  try {
    o.rate_certificate = check_linear_rate_condition(t.spec, t.x0);
  } catch (const Error&) {
  }
  if (o.experiment.main.termination == Termination::Converged) {
    try {
      o.second_order = certify_local_minimum(t.spec, o.experiment.main.state);
      o.second_order_status = o.second_order->positive_definite ? "positive_definite"
                                                                 : "not_positive_definite";
    } catch (const InconclusiveActiveSetError&) {
      o.second_order_status = "inconclusive_active_set";
    } catch (const Error& e) {
      o.second_order_status = std::string("unavailable: ") + e.what();
    }
  } else {
    o.second_order_status = "not_converged";
  }
  return o;
}

io::json finite_or_null(double v) { return std::isfinite(v) ? io::json(v) : io::json(nullptr); }

io::json fit_json(const RateFit& f) {
  return {{"slope", f.slope},         {"intercept", f.intercept}, {"r2", f.r2},
          {"contraction", f.contraction}, {"points", f.points},    {"first_k", f.first_k},
          {"last_k", f.last_k},       {"linear", f.linear()}};
}

io::json outcome_json(const RunOutcome& o) {
  const SolveReport& rep = o.experiment.main;
  const auto& hist = rep.state.history;
  double max_increase = -kInf;
  for (std::size_t k = 1; k < hist.size(); ++k)
    max_increase = std::max(max_increase, hist[k].lagrangian - hist[k - 1].lagrangian);

  io::json j;
  j["label"] = o.label;
  j["param"] = o.param;
  j["repeat"] = o.repeat;
  j["seed"] = o.seed;
  j["termination"] = to_string(rep.termination);
  j["iterations"] = rep.state.k;
  j["rho"] = rep.rho;
  j["w_threshold"] = finite_or_null(rep.w_threshold);
  j["final_lagrangian"] = finite_or_null(hist.back().lagrangian);
  j["l_star"] = finite_or_null(static_cast<double>(o.experiment.l_star));
  j["reference_run"] = o.experiment.has_reference;
  j["final_gap"] =
      finite_or_null(static_cast<double>(hist.back().lagrangian_ext - o.experiment.l_star));
  j["final_primal_residual"] = finite_or_null(hist.back().primal_residual);
  j["final_block_kkt"] = finite_or_null(hist.back().block_kkt);
  j["z_identity_residual"] = finite_or_null(rep.z_identity_residual);
  j["lagrangian_max_increase"] = finite_or_null(max_increase);
  j["subproblem_warnings"] = rep.subproblem_warnings;
  j["wall_seconds"] = rep.wall_seconds;
  j["csv"] = o.csv.filename().string();
  if (o.experiment.fit) {
    j["rate_fit"] = fit_json(*o.experiment.fit);
  } else {
    j["rate_fit"] = nullptr;
    j["rate_fit_error"] = o.experiment.fit_error;
  }
  if (o.rate_certificate) {
    const RateCertificate& c = *o.rate_certificate;
    j["rate_certificate"] = {{"lhs", finite_or_null(c.lhs)},     {"rhs", finite_or_null(c.rhs)},
                             {"ratio", finite_or_null(c.ratio)}, {"satisfied", c.satisfied},
                             {"m1", finite_or_null(c.m1)},       {"m2", finite_or_null(c.m2)},
                             {"m3", finite_or_null(c.m3)}};
  } else {
    j["rate_certificate"] = nullptr;
  }
  j["second_order"] = {{"status", o.second_order_status}};
  if (o.second_order) j["second_order"]["min_eigenvalue"] = o.second_order->reduced_hessian_min_eig;
  if (o.dt_certificate) {
    const DtCertificate& d = *o.dt_certificate;
    j["dt_certificate"] = {{"dt", d.dt},
                           {"t_total", d.t_total},
                           {"terms", {d.terms[0], d.terms[1], d.terms[2]}},
                           {"t0", d.t0},
                           {"satisfied", d.satisfied},
                           {"c_norm_bound", d.c_norm_bound},
                           {"c_norm_computed", d.c_norm_computed}};
  }
  return j;
}

std::string kind_name(PlanKind k) {
  switch (k) {
    case PlanKind::Solve: return "solve";
    case PlanKind::QSweep: return "q_sweep";
    case PlanKind::RhoSweep: return "rho_sweep";
    case PlanKind::InexactSweep: return "inexact_sweep";
    case PlanKind::DtSweep: return "dt_sweep";
  }
  return "";
}

}  // namespace

void write_wide_csv(const fs::path& path, const std::vector<RunOutcome>& runs) {
  std::ostringstream os;
  os << "k";
  std::size_t rows = 0;
  for (const RunOutcome& r : runs) {
    os << ",gap_" << r.label;
    rows = std::max(rows, r.experiment.main.state.history.size());
  }
  os << "\n";
  for (std::size_t k = 0; k < rows; ++k) {
    os << k;
    for (const RunOutcome& r : runs) {
      os << ",";
      const auto& h = r.experiment.main.state.history;
      if (k < h.size())
        os << io::format_double(static_cast<double>(h[k].lagrangian_ext - r.experiment.l_star));
    }
    os << "\n";
  }
  io::write_text(path, os.str());
}

RunResult run(const ExperimentPlan& plan) {
  plan.check();
  const fs::path out = plan.output_dir.empty() ? default_output_dir() : plan.output_dir;
  fs::create_directories(out);
  const std::vector<Task> tasks = build_tasks(plan, out);

  RunResult result;
  result.runs.resize(tasks.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, tasks.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++)
        result.runs[i] = execute(tasks[i], plan);
    }));
  }
  for (auto& f : pool) f.get();

  bool diverged = false, maxed = false;
  io::json runs = io::json::array();
  for (const RunOutcome& o : result.runs) {
    diverged |= o.experiment.main.termination == Termination::Diverged;
    maxed |= o.experiment.main.termination == Termination::MaxIterReached;
    runs.push_back(outcome_json(o));
  }
  result.exit_code = diverged ? 2 : maxed ? 3 : 0;

  io::json summary;
  summary["kind"] = kind_name(plan.kind);
  if (plan.kind != PlanKind::Solve) summary["param"] = param_name(plan.kind);
  summary["values"] = plan.values;
  summary["repeats"] = plan.repeats;
  summary["window_fraction"] = plan.window_fraction;
  summary["exit_code"] = result.exit_code;
  summary["runs"] = std::move(runs);
  result.summary = out / "summary.json";
  io::write_text(result.summary, summary.dump(2) + "\n");

  if (result.runs.size() > 1) {
    result.wide_csv = out / "sweep.csv";
    write_wide_csv(*result.wide_csv, result.runs);
  }
  return result;
}

std::vector<FitRow> fit_report(const std::vector<fs::path>& csvs, double window_fraction) {
  std::vector<FitRow> rows;
  for (const fs::path& p : csvs) {
    FitRow row;
    row.file = p;
    const io::CsvTable t = io::read_csv(p);
    if (std::find(t.header.begin(), t.header.end(), "gap") == t.header.end()) {
      row.error = "no gap column";
    } else {
      try {
        row.fit = estimate_rate(t.column("gap"), window_fraction);
      } catch (const Error& e) {
        row.error = e.what();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

io::json fit_report_json(const std::vector<FitRow>& rows) {
  io::json arr = io::json::array();
  for (const FitRow& r : rows) {
    io::json j;
    j["file"] = r.file.filename().string();
    if (r.fit) {
      j["fit"] = fit_json(*r.fit);
    } else {
      j["fit"] = nullptr;
      j["error"] = r.error;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string fit_report_table(const std::vector<FitRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(36) << "file" << std::right << std::setw(12) << "slope"
     << std::setw(10) << "r2" << std::setw(14) << "contraction" << std::setw(8) << "points"
     << "  linear\n";
  for (const FitRow& r : rows) {
    os << std::left << std::setw(36) << r.file.filename().string() << std::right;
    if (r.fit) {
      os << std::setw(12) << std::setprecision(5) << r.fit->slope << std::setw(10)
         << std::setprecision(5) << r.fit->r2 << std::setw(14) << std::setprecision(6)
         << r.fit->contraction << std::setw(8) << r.fit->points << "  "
         << (r.fit->linear() ? "yes" : "no") << "\n";
    } else {
      os << "  " << r.error << "\n";
    }
  }
  return os.str();
}

fs::path default_output_dir() {
  if (const char* env = std::getenv("MAQP_OUTPUT_DIR"); env && *env) return fs::path(env);
  return fs::path("maqp_out");
}

}  // namespace maqp
