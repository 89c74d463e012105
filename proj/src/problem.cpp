#include "maqp/problem.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "maqp/errors.hpp"
#include "maqp/linalg.hpp"

namespace maqp {

namespace {

bool same(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

bool same(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

// ---------------------------------------------------------------- blocks

BlockStructure::BlockStructure(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw DimensionError("block structure needs at least one block");
  offsets_.reserve(sizes_.size());
  Index off = 0;
  for (size_t j = 0; j < sizes_.size(); ++j) {
    if (sizes_[j] < 1)
      throw DimensionError("block " + std::to_string(j) + " has non-positive size");
    offsets_.push_back(off);
    off += sizes_[j];
  }
  total_ = off;
}

Index BlockStructure::block_of(Index coord) const {
  if (coord < 0 || coord >= total_)
    throw DimensionError("coordinate " + std::to_string(coord) + " out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), coord);
  return static_cast<Index>(it - offsets_.begin()) - 1;
}

// ---------------------------------------------------------------- sparse

SymmetricSparse::SymmetricSparse(Index dim, const std::vector<SparseEntry>& triplets)
    : dim_(dim) {
  std::map<std::pair<Index, Index>, double> acc;
  for (const auto& t : triplets) {
    if (t.row < 0 || t.col < 0 || t.row >= dim || t.col >= dim)
      throw DimensionError("triplet (" + std::to_string(t.row) + "," +
                           std::to_string(t.col) + ") outside " + std::to_string(dim) +
                           "x" + std::to_string(dim));
    auto key = std::minmax(t.row, t.col);
    acc[{key.first, key.second}] += t.value;
  }
  entries_.reserve(acc.size());
  for (const auto& [k, v] : acc)
    if (v != 0.0) entries_.push_back({k.first, k.second, v});
}

double SymmetricSparse::quad(const Vec& x) const {
  double s = 0.0;
  for (const auto& e : entries_) {
    const double t = e.value * x(e.row) * x(e.col);
    s += (e.row == e.col) ? t : 2.0 * t;
  }
  return s;
}

void SymmetricSparse::mul_add(const Vec& x, double alpha, Vec& y) const {
  for (const auto& e : entries_) {
    y(e.row) += alpha * e.value * x(e.col);
    if (e.row != e.col) y(e.col) += alpha * e.value * x(e.row);
  }
}

Mat SymmetricSparse::to_dense() const {
  Mat m = Mat::Zero(dim_, dim_);
  for (const auto& e : entries_) {
    m(e.row, e.col) = e.value;
    m(e.col, e.row) = e.value;
  }
  return m;
}

double SymmetricSparse::spectral_norm() const {
  if (entries_.empty()) return 0.0;
  // Restrict to the support, which is usually far smaller than dim.
  std::vector<Index> support;
  for (const auto& e : entries_) {
    support.push_back(e.row);
    support.push_back(e.col);
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  const Index s = static_cast<Index>(support.size());
  auto local = [&](Index g) {
    return static_cast<Index>(std::lower_bound(support.begin(), support.end(), g) -
                              support.begin());
  };
  std::vector<SparseEntry> loc;
  loc.reserve(entries_.size());
  for (const auto& e : entries_) loc.push_back({local(e.row), local(e.col), e.value});

  if (s <= 256) {
    Mat m = Mat::Zero(s, s);
    for (const auto& e : loc) m(e.row, e.col) = m(e.col, e.row) = e.value;
    Vec ev = linalg::sym_eigenvalues(m);
    return std::max(std::abs(ev(0)), std::abs(ev(s - 1)));
  }
  auto apply = [&](const auto& x, Vec& y) {
    for (const auto& e : loc) {
      y(e.row) += e.value * x(e.col);
      if (e.row != e.col) y(e.col) += e.value * x(e.row);
    }
  };
  return linalg::lanczos_spectral_norm(s, apply);
}

// ---------------------------------------------------------------- operator

MultiAffineOperator::MultiAffineOperator(BlockStructure blocks, std::vector<ConstraintRow> rows)
    : blocks_(std::move(blocks)), rows_(std::move(rows)) {
  const Index n = blocks_.total();
  const Index nb = blocks_.count();
  std::vector<Index> owner(static_cast<size_t>(n));
  for (Index j = 0; j < nb; ++j)
    for (Index k = 0; k < blocks_.size(j); ++k)
      owner[static_cast<size_t>(blocks_.offset(j) + k)] = j;

  index_.assign(static_cast<size_t>(nb), {});
  d_sparse_.resize(rows_.size());
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    const Index row = static_cast<Index>(i);
    if (r.C.dim() != n)
      throw DimensionError("row " + std::to_string(i) + ": C has dimension " +
                           std::to_string(r.C.dim()) + ", expected " + std::to_string(n));
    if (r.d.size() != n)
      throw DimensionError("row " + std::to_string(i) + ": d has length " +
                           std::to_string(r.d.size()) + ", expected " + std::to_string(n));
    for (const auto& e : r.C.entries()) {
      const Index ba = owner[static_cast<size_t>(e.row)];
      const Index bb = owner[static_cast<size_t>(e.col)];
      if (ba == bb) {
        auto& v = index_[static_cast<size_t>(ba)].diagonal_violations;
        if (v.empty() || v.back() != row) v.push_back(row);
        continue;
      }
      index_[static_cast<size_t>(ba)].couplings.push_back(
          {row, e.row - blocks_.offset(ba), e.col, e.value});
      index_[static_cast<size_t>(bb)].couplings.push_back(
          {row, e.col - blocks_.offset(bb), e.row, e.value});
    }
    for (Index k = 0; k < n; ++k) {
      if (r.d(k) == 0.0) continue;
      d_sparse_[i].push_back({k, r.d(k)});
      const Index b = owner[static_cast<size_t>(k)];
      index_[static_cast<size_t>(b)].linear.push_back({row, k - blocks_.offset(b), r.d(k)});
    }
  }
  for (auto& bi : index_) {
    auto& ar = bi.active_rows;
    for (const auto& c : bi.couplings) ar.push_back(c.row);
    for (const auto& l : bi.linear) ar.push_back(l.row);
    std::sort(ar.begin(), ar.end());
    ar.erase(std::unique(ar.begin(), ar.end()), ar.end());
  }
}

bool MultiAffineOperator::is_linear() const {
  return std::all_of(rows_.begin(), rows_.end(), [](const auto& r) { return r.C.empty(); });
}

bool MultiAffineOperator::operator==(const MultiAffineOperator& o) const {
  if (!(blocks_ == o.blocks_) || rows_.size() != o.rows_.size()) return false;
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& a = rows_[i];
    const auto& b = o.rows_[i];
    if (!(a.C == b.C) || !same(a.d, b.d) || !(a.e == b.e)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- objective

double QuadraticObjective::mu() const { return linalg::min_eigenvalue(P); }
double QuadraticObjective::lip() const { return linalg::max_eigenvalue(P); }

Vec QuadraticObjective::minimizer() const {
  if (linalg::is_diagonal(P)) return -(q.array() / P.diagonal().array()).matrix();
  return -P.llt().solve(q);
}

bool QuadraticObjective::operator==(const QuadraticObjective& o) const {
  return same(P, o.P) && same(q, o.q) && r == o.r;
}

bool BoxSet::operator==(const BoxSet& o) const {
  return same(lower, o.lower) && same(upper, o.upper);
}

bool PolyhedronSet::operator==(const PolyhedronSet& o) const {
  return same(G, o.G) && same(h, o.h);
}

bool contains(const IndicatorSet& set, const Vec& v, double tol) {
  if (const auto* b = std::get_if<BoxSet>(&set)) {
    for (Index i = 0; i < v.size(); ++i)
      if (v(i) < b->lower(i) - tol || v(i) > b->upper(i) + tol) return false;
    return true;
  }
  if (const auto* p = std::get_if<PolyhedronSet>(&set)) {
    if (p->G.rows() == 0) return true;
    return ((p->G * v - p->h).array() <= tol).all();
  }
  return true;
}

Index set_dim(const IndicatorSet& set) {
  if (const auto* b = std::get_if<BoxSet>(&set)) return b->lower.size();
  if (const auto* p = std::get_if<PolyhedronSet>(&set)) return p->G.cols();
  return -1;
}

// ---------------------------------------------------------------- spec

double ProblemSpec::f_value(const Vec& x) const {
  double v = f.value(x);
  for (const auto& t : nonconvex_terms) {
    const double s = std::sin(x(t.index));
    v += t.weight * s * s;
  }
  return v;
}

Vec ProblemSpec::f_gradient(const Vec& x) const {
  Vec g = f.gradient(x);
  for (const auto& t : nonconvex_terms) g(t.index) += t.weight * std::sin(2.0 * x(t.index));
  return g;
}

Mat ProblemSpec::f_hessian(const Vec& x) const {
  Mat h = f.P;
  for (const auto& t : nonconvex_terms)
    h(t.index, t.index) += 2.0 * t.weight * std::cos(2.0 * x(t.index));
  return h;
}

bool ProblemSpec::x_feasible(const Vec& x, double tol) const {
  for (Index j = 0; j < blocks.count(); ++j)
    if (!contains(indicators[static_cast<size_t>(j)],
                  x.segment(blocks.offset(j), blocks.size(j)), tol))
      return false;
  return true;
}

bool ProblemSpec::operator==(const ProblemSpec& o) const {
  return blocks == o.blocks && f == o.f && indicators == o.indicators && A == o.A &&
         same(Q, o.Q) && phi == o.phi && allow_rank_deficient == o.allow_rank_deficient &&
         outside_theory == o.outside_theory && nonconvex_terms == o.nonconvex_terms;
}

// ---------------------------------------------------------------- validation

namespace {

std::vector<std::string> dimension_problems(const ProblemSpec& s) {
  std::vector<std::string> out;
  const Index n = s.blocks.total();
  if (s.blocks.count() == 0) out.push_back("no blocks");
  if (!(s.A.blocks() == s.blocks)) out.push_back("operator block structure differs from spec");
  if (s.f.P.rows() != n || s.f.P.cols() != n || s.f.q.size() != n)
    out.push_back("f has dimension " + std::to_string(s.f.q.size()) + ", expected " +
                  std::to_string(n));
  if (s.Q.rows() != s.A.n_c())
    out.push_back("Q has " + std::to_string(s.Q.rows()) + " rows, A has " +
                  std::to_string(s.A.n_c()));
  if (s.phi.P.rows() != s.Q.cols() || s.phi.P.cols() != s.Q.cols() ||
      s.phi.q.size() != s.Q.cols())
    out.push_back("phi has dimension " + std::to_string(s.phi.q.size()) + ", Q has " +
                  std::to_string(s.Q.cols()) + " columns");
  if (static_cast<Index>(s.indicators.size()) != s.blocks.count())
    out.push_back(std::to_string(s.indicators.size()) + " indicator sets for " +
                  std::to_string(s.blocks.count()) + " blocks");
  else
    for (Index j = 0; j < s.blocks.count(); ++j) {
      const auto& set = s.indicators[static_cast<size_t>(j)];
      const Index d = set_dim(set);
      if (d >= 0 && d != s.blocks.size(j))
        out.push_back("indicator " + std::to_string(j) + " has dimension " +
                      std::to_string(d) + ", block has " + std::to_string(s.blocks.size(j)));
      if (const auto* b = std::get_if<BoxSet>(&set); b && b->upper.size() != b->lower.size())
        out.push_back("indicator " + std::to_string(j) + " box bounds differ in length");
      if (const auto* p = std::get_if<PolyhedronSet>(&set); p && p->h.size() != p->G.rows())
        out.push_back("indicator " + std::to_string(j) + " polyhedron G/h rows differ");
    }
  for (const auto& t : s.nonconvex_terms)
    if (t.index < 0 || t.index >= n)
      out.push_back("nonconvex term index " + std::to_string(t.index) + " out of range");
  return out;
}

bool polyhedron_nonempty(const PolyhedronSet& p) {
  if (p.G.rows() == 0) return true;
  const double scale = 1e-9 * (1.0 + p.h.cwiseAbs().maxCoeff());
  const double L = std::pow(linalg::singular_values(p.G)(0), 2);
  if (L == 0.0) return (p.h.array() >= -scale).all();
  Vec v = Vec::Zero(p.G.cols());
  for (int it = 0; it < 10000; ++it) {
    Vec viol = (p.G * v - p.h).cwiseMax(0.0);
    if (viol.maxCoeff() <= scale) return true;
    v -= (p.G.transpose() * viol) / L;
  }
  return ((p.G * v - p.h).array() <= scale).all();
}

bool symmetric(const Mat& m) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <=
         1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace

void check_dimensions(const ProblemSpec& spec) {
  auto p = dimension_problems(spec);
  if (!p.empty()) throw DimensionError(p.front());
}

ConstantSet spectral_constants(const ProblemSpec& spec) {
  check_dimensions(spec);
  ConstantSet c;
  c.mu_f = spec.f.mu();
  c.lip_f = spec.f.lip();
  c.mu_phi = spec.phi.mu();
  c.lip_phi = spec.phi.lip();
  for (const auto& r : spec.A.rows()) {
    c.norm_C = std::max(c.norm_C, r.C.spectral_norm());
    c.norm_d = std::max(c.norm_d, r.d.norm());
    c.norm_e = std::max(c.norm_e, std::abs(r.e));
  }
  c.singular_values_Q = linalg::singular_values(spec.Q);
  const Vec& s = c.singular_values_Q;
  c.rank_Q = linalg::numerical_rank(s);
  if (c.rank_Q > 0) {
    const double smin_plus = s(c.rank_Q - 1);
    // Nonzero eigenvalues of Q^T Q and Q Q^T coincide.
    c.lambda_min_plus_QtQ = smin_plus * smin_plus;
    c.lambda_min_plus_QQt = c.lambda_min_plus_QtQ;
  }
  const bool full_row_rank = spec.n_c() > 0 && c.rank_Q == spec.n_c();
  if (full_row_rank) {
    const double smin = s(spec.n_c() - 1);
    c.lambda_min_QQt = smin * smin;
    c.norm_QQt_inv_Q = 1.0 / smin;
  } else {
    c.lambda_min_QQt = 0.0;
    c.norm_QQt_inv_Q = kInf;
  }
  return c;
}

bool ValidationReport::has(ValidationIssue::Kind k) const {
  return std::any_of(violations.begin(), violations.end(),
                     [k](const auto& v) { return v.kind == k; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  if (valid())
    os << "valid";
  else
    os << violations.size() << " violation(s)";
  for (const auto& v : violations) os << "\n  error: " << v.message;
  for (const auto& w : warnings) os << "\n  warning: " << w.message;
  return os.str();
}

ValidationReport validate(const ProblemSpec& spec) {
  using K = ValidationIssue::Kind;
  ValidationReport rep;
  try {
    auto dims = dimension_problems(spec);
    for (auto& m : dims) rep.violations.push_back({K::Dimension, std::move(m)});
    if (!dims.empty()) return rep;

    for (Index j = 0; j < spec.blocks.count(); ++j)
      for (Index row : spec.A.block_index(j).diagonal_violations)
        rep.violations.push_back({K::DiagonalBlock,
                                  "C_" + std::to_string(row) + " has a nonzero entry in the " +
                                      "diagonal block of block " + std::to_string(j),
                                  row, j});

    rep.constants = spectral_constants(spec);
    rep.constants_available = true;
    const auto& c = rep.constants;

    if (spec.n_c() > 0 && c.rank_Q < spec.n_c()) {
      std::ostringstream os;
      os << "Q is not full row rank (rank " << c.rank_Q << " < " << spec.n_c()
         << "; singular values";
      for (Index i = 0; i < c.singular_values_Q.size(); ++i) os << ' ' << c.singular_values_Q(i);
      os << ')';
      ValidationIssue issue{K::RankDeficientQ, os.str()};
      if (spec.allow_rank_deficient)
        rep.warnings.push_back(issue);
      else
        rep.violations.push_back(issue);
    }
    if (!symmetric(spec.f.P) || !(c.mu_f > 0.0))
      rep.violations.push_back({K::NotPositiveDefinite,
                                "f.P is not symmetric positive definite (min eigenvalue " +
                                    std::to_string(c.mu_f) + ")"});
    if (!symmetric(spec.phi.P) || !(c.mu_phi > 0.0))
      rep.violations.push_back({K::NotPositiveDefinite,
                                "phi.P is not symmetric positive definite (min eigenvalue " +
                                    std::to_string(c.mu_phi) + ")"});

    for (Index j = 0; j < spec.blocks.count(); ++j) {
      const auto& set = spec.indicators[static_cast<size_t>(j)];
      if (const auto* b = std::get_if<BoxSet>(&set)) {
        if (!(b->lower.array() <= b->upper.array()).all())
          rep.violations.push_back(
              {K::EmptySet, "box of block " + std::to_string(j) + " has lower > upper", -1, j});
      } else if (const auto* p = std::get_if<PolyhedronSet>(&set)) {
        if (!polyhedron_nonempty(*p))
          rep.violations.push_back(
              {K::EmptySet, "polyhedron of block " + std::to_string(j) + " is empty", -1, j});
      }
    }

    if (!spec.nonconvex_terms.empty()) {
      ValidationIssue issue{K::OutsideTheory, "objective has non-quadratic terms"};
      if (spec.outside_theory)
        rep.warnings.push_back(issue);
      else
        rep.violations.push_back(issue);
    }
  } catch (const std::exception& e) {
    rep.violations.push_back({K::Dimension, e.what()});
  }
  return rep;
}

}  // namespace maqp
