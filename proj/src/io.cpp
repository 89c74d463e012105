#include "maqp/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "maqp/errors.hpp"
#include "maqp/linalg.hpp"

namespace maqp::io {

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& what) {
  throw ParseError(source, 0, what);
}

const json& field(const json& j, const char* key, const std::string& source) {
  if (!j.is_object() || !j.contains(key)) fail(source, std::string("missing key '") + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& source, const std::string& what) {
  if (!j.is_number()) fail(source, what + " must be a number");
  return j.get<double>();
}

// Bounds use null for an infinite value.
double bound(const json& j, double inf_value, const std::string& source) {
  if (j.is_null()) return inf_value;
  return num(j, source, "bound");
}

Vec vec(const json& j, const std::string& source, const std::string& what) {
  if (!j.is_array()) fail(source, what + " must be an array");
  Vec v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = num(j[i], source, what);
  return v;
}

Vec3 vec3(const json& j, const std::string& source, const std::string& what) {
  Vec v = vec(j, source, what);
  if (v.size() != 3) fail(source, what + " must have 3 entries");
  return v;
}

Mat rows_matrix(const json& j, Index cols, const std::string& source, const std::string& what) {
  if (!j.is_array()) fail(source, what + " must be an array of rows");
  Mat m(static_cast<Index>(j.size()), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    Vec row = vec(j[r], source, what);
    if (row.size() != cols)
      fail(source, what + " row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                       " entries, expected " + std::to_string(cols));
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

std::vector<SparseEntry> triplets(const json& j, const std::string& source, const std::string& what) {
  if (!j.is_array()) fail(source, what + " must be an array of [row, col, value]");
  std::vector<SparseEntry> out;
  out.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer())
      fail(source, what + " entries must be [row, col, value]");
    out.push_back({t[0].get<Index>(), t[1].get<Index>(), num(t[2], source, what)});
  }
  return out;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json bound_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i)
    a.push_back(std::isinf(v(i)) ? json(nullptr) : json(v(i)));
  return a;
}

json rows_json(const Mat& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

json triplets_json(const std::vector<SparseEntry>& e) {
  json a = json::array();
  for (const auto& t : e) a.push_back(json::array({t.row, t.col, t.value}));
  return a;
}

json objective_json(const QuadraticObjective& o) {
  json j;
  const Index n = o.P.rows();
  Index nnz = 0;
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      if (o.P(r, c) != 0.0) ++nnz;
  const bool symmetric = o.P.rows() == o.P.cols() && o.P == o.P.transpose();
  if (symmetric && 3 * nnz < n * n) {
    std::vector<SparseEntry> e;
    for (Index r = 0; r < n; ++r)
      for (Index c = r; c < n; ++c)
        if (o.P(r, c) != 0.0) e.push_back({r, c, o.P(r, c)});
    j["P"] = json{{"triplets", triplets_json(e)}};
  } else {
    j["P"] = rows_json(o.P);
  }
  j["q"] = vec_json(o.q);
  j["r"] = o.r;
  return j;
}

QuadraticObjective objective_from(const json& j, const std::string& source, const std::string& what) {
  QuadraticObjective o;
  o.q = vec(field(j, "q", source), source, what + ".q");
  const Index n = o.q.size();
  o.r = j.contains("r") ? num(j.at("r"), source, what + ".r") : 0.0;
  const json& P = field(j, "P", source);
  if (P.is_object()) {
    o.P = SymmetricSparse(n, triplets(field(P, "triplets", source), source, what + ".P"))
              .to_dense();
  } else {
    o.P = rows_matrix(P, n, source, what + ".P");
    if (o.P.rows() != n) fail(source, what + ".P must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  return o;
}

long line_of(const std::string& text, size_t byte) {
  long line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json indicator_to_json(const IndicatorSet& set) {
  if (const auto* b = std::get_if<BoxSet>(&set))
    return json{{"type", "box"}, {"lower", bound_json(b->lower)}, {"upper", bound_json(b->upper)}};
  if (const auto* p = std::get_if<PolyhedronSet>(&set)) {
    json j{{"type", "polyhedron"}, {"G", rows_json(p->G)}, {"h", vec_json(p->h)}};
    j["dim"] = p->G.cols();
    return j;
  }
  return json{{"type", "free"}};
}

IndicatorSet indicator_from_json(const json& j, const std::string& source) {
  const json& t = field(j, "type", source);
  if (!t.is_string()) fail(source, "indicator type must be a string");
  const std::string type = t.get<std::string>();
  if (type == "free") return FreeSet{};
  if (type == "box") {
    const json& lo = field(j, "lower", source);
    const json& hi = field(j, "upper", source);
    if (!lo.is_array() || !hi.is_array() || lo.size() != hi.size())
      fail(source, "box lower/upper must be arrays of equal length");
    BoxSet b{Vec(static_cast<Index>(lo.size())), Vec(static_cast<Index>(hi.size()))};
    for (size_t i = 0; i < lo.size(); ++i) {
      b.lower(static_cast<Index>(i)) = bound(lo[i], -kInf, source);
      b.upper(static_cast<Index>(i)) = bound(hi[i], kInf, source);
    }
    return b;
  }
  if (type == "polyhedron") {
    const json& G = field(j, "G", source);
    Index cols = 0;
    if (j.contains("dim"))
      cols = j.at("dim").get<Index>();
    else if (G.is_array() && !G.empty() && G[0].is_array())
      cols = static_cast<Index>(G[0].size());
    PolyhedronSet p{rows_matrix(G, cols, source, "G"), vec(field(j, "h", source), source, "h")};
    if (p.h.size() != p.G.rows()) fail(source, "polyhedron G and h differ in row count");
    return p;
  }
  fail(source, "unknown indicator type '" + type + "'");
}

json problem_to_json(const ProblemSpec& spec) {
  json j;
  json blocks = json::array();
  for (Index s : spec.blocks.sizes()) blocks.push_back(s);
  j["blocks"] = blocks;
  j["f"] = objective_json(spec.f);
  j["phi"] = objective_json(spec.phi);
  j["Q"] = rows_json(spec.Q);
  j["n_z"] = spec.Q.cols();
  json cons = json::array();
  for (const auto& r : spec.A.rows())
    cons.push_back(json{{"C", triplets_json(r.C.entries())}, {"d", vec_json(r.d)}, {"e", r.e}});
  j["constraints"] = cons;
  json ind = json::array();
  for (const auto& s : spec.indicators) ind.push_back(indicator_to_json(s));
  j["indicators"] = ind;
  if (spec.allow_rank_deficient) j["allow_rank_deficient"] = true;
  if (spec.outside_theory) j["outside_theory"] = true;
  if (!spec.nonconvex_terms.empty()) {
    json t = json::array();
    for (const auto& s : spec.nonconvex_terms)
      t.push_back(json{{"type", "sin2"}, {"index", s.index}, {"weight", s.weight}});
    j["nonconvex_terms"] = t;
  }
  return j;
}

ProblemSpec problem_from_json(const json& j, const std::string& source) {
  try {
    ProblemSpec s;
    const json& b = field(j, "blocks", source);
    if (!b.is_array()) fail(source, "blocks must be an array of sizes");
    std::vector<Index> sizes;
    for (const auto& v : b) {
      if (!v.is_number_integer()) fail(source, "block sizes must be integers");
      sizes.push_back(v.get<Index>());
    }
    s.blocks = BlockStructure(sizes);
    const Index n = s.blocks.total();
    s.f = objective_from(field(j, "f", source), source, "f");
    s.phi = objective_from(field(j, "phi", source), source, "phi");
    const Index nz = j.contains("n_z") ? j.at("n_z").get<Index>() : s.phi.q.size();
    s.Q = rows_matrix(field(j, "Q", source), nz, source, "Q");
    const json& cons = field(j, "constraints", source);
    if (!cons.is_array()) fail(source, "constraints must be an array");
    std::vector<ConstraintRow> rows;
    for (size_t i = 0; i < cons.size(); ++i) {
      const std::string what = "constraints[" + std::to_string(i) + "]";
      ConstraintRow r;
      r.C = SymmetricSparse(n, triplets(field(cons[i], "C", source), source, what + ".C"));
      r.d = vec(field(cons[i], "d", source), source, what + ".d");
      r.e = num(field(cons[i], "e", source), source, what + ".e");
      rows.push_back(std::move(r));
    }
    s.A = MultiAffineOperator(s.blocks, std::move(rows));
    const json& ind = field(j, "indicators", source);
    if (!ind.is_array()) fail(source, "indicators must be an array");
    for (const auto& i : ind) s.indicators.push_back(indicator_from_json(i, source));
    s.allow_rank_deficient = j.value("allow_rank_deficient", false);
    s.outside_theory = j.value("outside_theory", false);
    if (j.contains("nonconvex_terms"))
      for (const auto& t : j.at("nonconvex_terms")) {
        if (t.value("type", std::string()) != "sin2") fail(source, "unknown nonconvex term type");
        s.nonconvex_terms.push_back(
            {field(t, "index", source).get<Index>(), num(field(t, "weight", source), source, "weight")});
      }
    return s;
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    fail(source, e.what());
  } catch (const DimensionError& e) {
    fail(source, e.what());
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), line_of(text, e.byte), e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  return problem_from_json(read_json(path), path.string());
}

void save_problem(const ProblemSpec& spec, const std::filesystem::path& path) {
  write_text(path, problem_to_json(spec).dump(1) + "\n");
}

json locomotion_to_json(const LocomotionSpec& l) {
  json j;
  j["mass"] = l.mass;
  j["gravity"] = vec_json(l.gravity);
  j["dt"] = l.dt;
  j["steps"] = l.steps;
  j["effectors"] = l.effectors;
  json contacts = json::array();
  for (const auto& step : l.contacts) {
    json s = json::array();
    for (const auto& r : step) s.push_back(vec_json(r));
    contacts.push_back(s);
  }
  j["contacts"] = contacts;
  j["c_init"] = vec_json(l.c_init);
  j["cdot_init"] = vec_json(l.cdot_init);
  j["k_init"] = vec_json(l.k_init);
  json sets = json::array();
  for (const auto& step : l.force_sets) {
    json s = json::array();
    for (const auto& f : step) s.push_back(indicator_to_json(f));
    sets.push_back(s);
  }
  j["force_sets"] = sets;
  j["weights"] = json{{"force", l.force_weight}, {"momentum", l.momentum_weight}};
  if (l.com_bounds)
    j["com_bounds"] = json{{"lower", bound_json(l.com_bounds->lower)},
                           {"upper", bound_json(l.com_bounds->upper)}};
  return j;
}

LocomotionSpec locomotion_from_json(const json& j, const std::string& source,
                                    std::optional<double> dt) {
  try {
    LocomotionSpec l;
    l.mass = num(field(j, "mass", source), source, "mass");
    l.gravity = vec3(field(j, "gravity", source), source, "gravity");
    l.c_init = vec3(field(j, "c_init", source), source, "c_init");
    l.cdot_init = vec3(field(j, "cdot_init", source), source, "cdot_init");
    l.k_init = j.contains("k_init") ? vec3(j.at("k_init"), source, "k_init") : Vec3(Vec3::Zero());
    const json& w = field(j, "weights", source);
    l.force_weight = num(field(w, "force", source), source, "weights.force");
    l.momentum_weight = num(field(w, "momentum", source), source, "weights.momentum");
    if (j.contains("com_bounds")) {
      const json& cb = j.at("com_bounds");
      ComBounds b;
      const json& lo = field(cb, "lower", source);
      const json& hi = field(cb, "upper", source);
      if (!lo.is_array() || !hi.is_array() || lo.size() != 3 || hi.size() != 3)
        fail(source, "com_bounds lower/upper need 3 entries");
      for (int a = 0; a < 3; ++a) {
        b.lower(a) = bound(lo[a], -kInf, source);
        b.upper(a) = bound(hi[a], kInf, source);
      }
      l.com_bounds = b;
    }
    const json& fs = field(j, "force_sets", source);

    if (j.contains("contact_schedule")) {
      GaitSchedule g;
      g.duration = num(field(j, "duration", source), source, "duration");
      for (const auto& ph : j.at("contact_schedule")) {
        ContactPhase p;
        p.until = num(field(ph, "until", source), source, "until");
        for (const auto& r : field(ph, "positions", source)) p.positions.push_back(vec3(r, source, "position"));
        g.phases.push_back(std::move(p));
      }
      const int N = g.phases.empty() ? 0 : static_cast<int>(g.phases.front().positions.size());
      if (fs.is_object()) {
        g.force_sets.assign(static_cast<size_t>(N), indicator_from_json(fs, source));
      } else {
        for (const auto& s : fs) g.force_sets.push_back(indicator_from_json(s, source));
      }
      const double step = dt ? *dt : num(field(j, "dt", source), source, "dt");
      return instantiate(l, g, step);
    }

    l.dt = num(field(j, "dt", source), source, "dt");
    if (dt && *dt != l.dt)
      fail(source, "dt override needs a contact_schedule; this file lists explicit contacts");
    l.steps = field(j, "steps", source).get<int>();
    l.effectors = field(j, "effectors", source).get<int>();
    for (const auto& step : field(j, "contacts", source)) {
      std::vector<Vec3> s;
      for (const auto& r : step) s.push_back(vec3(r, source, "contact"));
      l.contacts.push_back(std::move(s));
    }
    const size_t T1 = static_cast<size_t>(std::max(l.steps, 0)) + 1;
    const size_t N = static_cast<size_t>(std::max(l.effectors, 0));
    if (fs.is_object()) {
      l.force_sets.assign(T1, std::vector<IndicatorSet>(N, indicator_from_json(fs, source)));
    } else if (fs.is_array() && !fs.empty() && fs[0].is_object()) {
      std::vector<IndicatorSet> per;
      for (const auto& s : fs) per.push_back(indicator_from_json(s, source));
      l.force_sets.assign(T1, per);
    } else {
      for (const auto& step : fs) {
        std::vector<IndicatorSet> per;
        for (const auto& s : step) per.push_back(indicator_from_json(s, source));
        l.force_sets.push_back(std::move(per));
      }
    }
    return l;
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    fail(source, e.what());
  }
}

LocomotionSpec load_locomotion(const std::filesystem::path& path, std::optional<double> dt) {
  return locomotion_from_json(read_json(path), path.string(), dt);
}

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history,
                       long double l_star) {
  for (size_t i = 0; i < kHistoryColumns.size(); ++i)
    os << (i ? "," : "") << kHistoryColumns[i];
  os << '\n';
  for (const auto& r : history) {
    os << r.k << ',' << format_double(r.lagrangian) << ',' << format_double(static_cast<double>(r.lagrangian_ext - l_star))
       << ',' << format_double(r.primal_residual) << ',' << format_double(r.dx) << ','
       << format_double(r.dz) << ',' << format_double(r.dw) << ','
       << format_double(r.dual_identity_residual) << ',' << format_double(r.block_kkt) << ','
       << format_double(r.subopt) << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& history, long double l_star) {
  std::ostringstream os;
  write_history_csv(os, history, l_star);
  write_text(path, os.str());
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw ParseError("<csv>", 1, "no column named '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  long lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      t.header = split(line);
      if (t.header.empty()) throw ParseError(path.string(), lineno, "empty header");
      t.columns.assign(t.header.size(), {});
      continue;
    }
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(cells.size()));
    for (size_t c = 0; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      double v = std::nan("");
      if (!s.empty()) {
        // strtod keeps subnormals and parses inf/nan, where stod would throw.
        char* end = nullptr;
        v = std::strtod(s.c_str(), &end);
        const size_t used = static_cast<size_t>(end - s.c_str());
        if (used != s.size())
          throw ParseError(path.string(), lineno,
                           "column '" + t.header[c] + "': not a number: '" + s + "'");
      }
      t.columns[c].push_back(v);
    }
  }
  if (lineno == 0) throw ParseError(path.string(), 1, "empty file");
  return t;
}

}  // namespace maqp::io
