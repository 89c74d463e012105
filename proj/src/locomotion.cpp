#include "maqp/locomotion.hpp"

#include <cmath>

#include "maqp/errors.hpp"

namespace maqp {

void LocomotionSpec::check() const {
  if (!(mass > 0.0)) throw CompileError(0, "mass must be positive");
  if (!(dt > 0.0)) throw CompileError(0, "dt must be positive");
  if (steps < 1) throw CompileError(0, "at least one step is required");
  if (effectors < 1) throw CompileError(0, "at least one end-effector is required");
  if (!(force_weight > 0.0) || !(momentum_weight > 0.0))
    throw CompileError(0, "cost weights must be positive");
  if (static_cast<int>(contacts.size()) != steps)
    throw CompileError(static_cast<int>(std::min<size_t>(contacts.size(), steps)),
                       "contacts must list " + std::to_string(steps) + " steps, got " +
                           std::to_string(contacts.size()));
  for (int i = 0; i < steps; ++i)
    if (static_cast<int>(contacts[static_cast<size_t>(i)].size()) != effectors)
      throw CompileError(i, "expected " + std::to_string(effectors) + " contact points");
  if (static_cast<int>(force_sets.size()) != steps + 1)
    throw CompileError(static_cast<int>(std::min<size_t>(force_sets.size(), steps + 1)),
                       "force_sets must list " + std::to_string(steps + 1) + " steps, got " +
                           std::to_string(force_sets.size()));
  for (int i = 0; i <= steps; ++i) {
    const auto& row = force_sets[static_cast<size_t>(i)];
    if (static_cast<int>(row.size()) != effectors)
      throw CompileError(i, "expected " + std::to_string(effectors) + " force sets");
    for (const auto& s : row) {
      const Index d = set_dim(s);
      if (d >= 0 && d != 3) throw CompileError(i, "force set is not 3-dimensional");
      if (const auto* b = std::get_if<BoxSet>(&s))
        if (b->upper.size() != 3 || !(b->lower.array() <= b->upper.array()).all())
          throw CompileError(i, "force box is empty");
      if (const auto* p = std::get_if<PolyhedronSet>(&s))
        if (p->h.size() != p->G.rows()) throw CompileError(i, "force polyhedron G/h mismatch");
    }
  }
}

LocomotionSpec instantiate(LocomotionSpec base, const GaitSchedule& gait, double dt) {
  if (!(dt > 0.0)) throw CompileError(0, "dt must be positive");
  if (gait.phases.empty()) throw CompileError(0, "contact schedule has no phases");
  const double ratio = gait.duration / dt;
  const int T = static_cast<int>(std::lround(ratio));
  if (T < 1 || std::abs(ratio - T) > 1e-9 * std::max(1.0, ratio))
    throw CompileError(0, "duration is not a whole number of dt steps");
  base.dt = dt;
  base.steps = T;
  base.effectors = static_cast<int>(gait.force_sets.size());
  base.contacts.assign(static_cast<size_t>(T), {});
  for (int i = 0; i < T; ++i) {
    const double t = i * dt;
    size_t p = 0;
    while (p + 1 < gait.phases.size() && !(t < gait.phases[p].until - 1e-9 * dt)) ++p;
    const auto& pos = gait.phases[p].positions;
    if (static_cast<int>(pos.size()) != base.effectors)
      throw CompileError(i, "contact phase lists " + std::to_string(pos.size()) +
                                " positions for " + std::to_string(base.effectors) + " effectors");
    base.contacts[static_cast<size_t>(i)] = pos;
  }
  base.force_sets.assign(static_cast<size_t>(T) + 1, gait.force_sets);
  return base;
}

std::vector<AffineCoM> eliminate_com_states(const LocomotionSpec& loco) {
  loco.check();
  const int T = loco.steps;
  const int N = loco.effectors;
  const Index n = loco.force_dim();
  const double dt = loco.dt;
  std::vector<AffineCoM> out(static_cast<size_t>(T) + 1);
  for (int i = 0; i <= T; ++i) {
    AffineCoM& a = out[static_cast<size_t>(i)];
    a.position_coef = Mat::Zero(3, n);
    a.velocity_coef = Mat::Zero(3, n);
    a.position_const = loco.c_init + loco.cdot_init * (i * dt);
    a.velocity_const = loco.cdot_init;
    for (int ip = 0; ip <= i - 1; ++ip) {
      a.velocity_const += loco.gravity * dt;
      for (int l = 0; l < N; ++l)
        for (int c = 0; c < 3; ++c) a.velocity_coef(c, loco.force_index(ip, l, c)) += dt / loco.mass;
    }
    for (int ip = 0; ip <= i - 2; ++ip) {
      const double w = static_cast<double>(i - 1 - ip) * dt * dt;
      a.position_const += w * loco.gravity;
      for (int l = 0; l < N; ++l)
        for (int c = 0; c < 3; ++c) a.position_coef(c, loco.force_index(ip, l, c)) += w / loco.mass;
    }
  }
  return out;
}

namespace {

// Components (p, q) with (u x v)_a = u_p v_q - u_q v_p.
constexpr int kCrossP[3] = {1, 2, 0};
constexpr int kCrossQ[3] = {2, 0, 1};

IndicatorSet combine_sets(const std::vector<IndicatorSet>& sets) {
  const Index n = 3 * static_cast<Index>(sets.size());
  bool all_free = true, any_poly = false;
  for (const auto& s : sets) {
    if (!std::holds_alternative<FreeSet>(s)) all_free = false;
    if (std::holds_alternative<PolyhedronSet>(s)) any_poly = true;
  }
  if (all_free) return FreeSet{};
  if (!any_poly) {
    BoxSet box{Vec::Constant(n, -kInf), Vec::Constant(n, kInf)};
    for (size_t j = 0; j < sets.size(); ++j)
      if (const auto* b = std::get_if<BoxSet>(&sets[j])) {
        box.lower.segment(3 * static_cast<Index>(j), 3) = b->lower;
        box.upper.segment(3 * static_cast<Index>(j), 3) = b->upper;
      }
    return box;
  }
  std::vector<std::pair<Vec, double>> rows;
  for (size_t j = 0; j < sets.size(); ++j) {
    const Index off = 3 * static_cast<Index>(j);
    if (const auto* b = std::get_if<BoxSet>(&sets[j])) {
      for (Index c = 0; c < 3; ++c) {
        if (std::isfinite(b->upper(c))) {
          Vec g = Vec::Zero(n);
          g(off + c) = 1.0;
          rows.emplace_back(g, b->upper(c));
        }
        if (std::isfinite(b->lower(c))) {
          Vec g = Vec::Zero(n);
          g(off + c) = -1.0;
          rows.emplace_back(g, -b->lower(c));
        }
      }
    } else if (const auto* p = std::get_if<PolyhedronSet>(&sets[j])) {
      for (Index r = 0; r < p->G.rows(); ++r) {
        Vec g = Vec::Zero(n);
        g.segment(off, 3) = p->G.row(r).transpose();
        rows.emplace_back(g, p->h(r));
      }
    }
  }
  PolyhedronSet poly{Mat(static_cast<Index>(rows.size()), n), Vec(static_cast<Index>(rows.size()))};
  for (size_t r = 0; r < rows.size(); ++r) {
    poly.G.row(static_cast<Index>(r)) = rows[r].first.transpose();
    poly.h(static_cast<Index>(r)) = rows[r].second;
  }
  return poly;
}

// Appends rows to a block set, converting it to a polyhedron.
IndicatorSet add_rows(const IndicatorSet& set, Index n, const Mat& G, const Vec& h) {
  std::vector<std::pair<Vec, double>> rows;
  if (const auto* b = std::get_if<BoxSet>(&set)) {
    for (Index c = 0; c < n; ++c) {
      if (std::isfinite(b->upper(c))) rows.emplace_back(Vec::Unit(n, c), b->upper(c));
      if (std::isfinite(b->lower(c))) rows.emplace_back(-Vec::Unit(n, c), -b->lower(c));
    }
  } else if (const auto* p = std::get_if<PolyhedronSet>(&set)) {
    for (Index r = 0; r < p->G.rows(); ++r) rows.emplace_back(p->G.row(r).transpose(), p->h(r));
  }
  for (Index r = 0; r < G.rows(); ++r) rows.emplace_back(G.row(r).transpose(), h(r));
  PolyhedronSet out{Mat(static_cast<Index>(rows.size()), n), Vec(static_cast<Index>(rows.size()))};
  for (size_t r = 0; r < rows.size(); ++r) {
    out.G.row(static_cast<Index>(r)) = rows[r].first.transpose();
    out.h(static_cast<Index>(r)) = rows[r].second;
  }
  return out;
}

DtCertificate dt_certificate_for(const LocomotionSpec& loco, const ProblemSpec& spec) {
  DtCertificate c;
  const double mu_f = 2.0 * loco.force_weight, lf = mu_f;
  const double mu_p = 2.0 * loco.momentum_weight, lp = mu_p;
  const double m = loco.mass;
  const double N = loco.effectors;
  const double T = loco.steps;
  c.dt = loco.dt;
  c.t_total = T * loco.dt;
  const double t5 = std::pow(c.t_total, 5);
  c.terms[0] = mu_f * mu_f * mu_p * m * m / (lp * lp * (lf + lp) * std::pow(N, 6) * t5);
  c.terms[1] = mu_f * std::sqrt(mu_p) * m / (std::pow(lp, 1.5) * std::pow(N, 3.5) * t5);
  c.terms[2] = mu_f * std::sqrt(mu_p) * m * m / (std::pow(lp, 1.5) * std::pow(N, 6) * t5);
  c.t0 = std::min({c.terms[0], c.terms[1], c.terms[2]});
  c.satisfied = loco.dt <= c.t0;
  c.c_norm_bound = N * N * 2.0 * std::pow(T, 1.5) * std::pow(loco.dt, 3) / (2.0 * m);
  for (const auto& r : spec.A.rows()) c.c_norm_computed = std::max(c.c_norm_computed, r.C.spectral_norm());
  return c;
}

}  // namespace

CompiledLocomotion compile(const LocomotionSpec& loco) {
  loco.check();
  const int T = loco.steps;
  const int N = loco.effectors;
  const Index n = loco.force_dim();
  const Index bs = 3 * static_cast<Index>(N);
  const double dt = loco.dt;
  const auto com = eliminate_com_states(loco);

  CompiledLocomotion out;
  ProblemSpec& s = out.spec;
  s.blocks = BlockStructure(std::vector<Index>(static_cast<size_t>(T) + 1, bs));

  std::vector<ConstraintRow> rows;
  rows.reserve(3 * (static_cast<size_t>(T) + 1));
  for (int a = 0; a < 3; ++a) {
    ConstraintRow r;
    r.C = SymmetricSparse(n, {});
    r.d = Vec::Zero(n);
    r.e = -loco.k_init(a);
    rows.push_back(std::move(r));
  }
  for (int i = 0; i < T; ++i) {
    const AffineCoM& ci = com[static_cast<size_t>(i)];
    std::array<std::vector<SparseEntry>, 3> trip;
    std::array<Vec, 3> d;
    for (auto& v : d) v = Vec::Zero(n);
    for (int j = 0; j < N; ++j) {
      const Vec3 arm = loco.contacts[static_cast<size_t>(i)][static_cast<size_t>(j)] - ci.position_const;
      for (int a = 0; a < 3; ++a) {
        const int p = kCrossP[a], q = kCrossQ[a];
        // Negated (arm x f) dt.
        d[a](loco.force_index(i, j, q)) -= arm(p) * dt;
        d[a](loco.force_index(i, j, p)) += arm(q) * dt;
      }
      for (int ip = 0; ip <= i - 2; ++ip) {
        const double beta = static_cast<double>(i - 1 - ip) * dt * dt * dt / loco.mass;
        for (int l = 0; l < N; ++l)
          for (int a = 0; a < 3; ++a) {
            const int p = kCrossP[a], q = kCrossQ[a];
            // +beta (u x v)_a with u = f_ip^l, v = f_i^j.
            trip[a].push_back({loco.force_index(ip, l, p), loco.force_index(i, j, q), beta});
            trip[a].push_back({loco.force_index(ip, l, q), loco.force_index(i, j, p), -beta});
          }
      }
    }
    for (int a = 0; a < 3; ++a) {
      ConstraintRow r;
      r.C = SymmetricSparse(n, trip[a]);
      r.d = std::move(d[a]);
      r.e = 0.0;
      rows.push_back(std::move(r));
    }
  }
  s.A = MultiAffineOperator(s.blocks, std::move(rows));
  const Index nz = 3 * (static_cast<Index>(T) + 1);
  s.Q = Mat::Identity(nz, nz);
  s.f = QuadraticObjective{2.0 * loco.force_weight * Mat::Identity(n, n), Vec::Zero(n), 0.0};
  s.phi = QuadraticObjective{2.0 * loco.momentum_weight * Mat::Identity(nz, nz), Vec::Zero(nz), 0.0};

  for (int i = 0; i <= T; ++i) s.indicators.push_back(combine_sets(loco.force_sets[static_cast<size_t>(i)]));

  if (loco.com_bounds) {
    const ComBounds& cb = *loco.com_bounds;
    for (int i = 0; i <= T; ++i) {
      const AffineCoM& ci = com[static_cast<size_t>(i)];
      std::vector<Index> touched;
      for (Index b = 0; b <= T; ++b)
        if (ci.position_coef.middleCols(b * bs, bs).cwiseAbs().maxCoeff() > 0.0) touched.push_back(b);
      if (touched.empty()) {
        for (int a = 0; a < 3; ++a)
          if (ci.position_const(a) < cb.lower(a) || ci.position_const(a) > cb.upper(a))
            throw CompileError(i, "initial CoM state violates the CoM bounds");
        continue;
      }
      if (touched.size() > 1) {
        out.com_skipped_steps.push_back(i);
        continue;
      }
      const Index b = touched.front();
      const Mat coef = ci.position_coef.middleCols(b * bs, bs);
      std::vector<std::pair<Vec, double>> extra;
      for (int a = 0; a < 3; ++a) {
        if (std::isfinite(cb.upper(a))) extra.emplace_back(coef.row(a).transpose(), cb.upper(a) - ci.position_const(a));
        if (std::isfinite(cb.lower(a))) extra.emplace_back(-coef.row(a).transpose(), ci.position_const(a) - cb.lower(a));
      }
      if (extra.empty()) continue;
      Mat G(static_cast<Index>(extra.size()), bs);
      Vec h(static_cast<Index>(extra.size()));
      for (size_t r = 0; r < extra.size(); ++r) {
        G.row(static_cast<Index>(r)) = extra[r].first.transpose();
        h(static_cast<Index>(r)) = extra[r].second;
      }
      auto& set = s.indicators[static_cast<size_t>(b)];
      set = add_rows(set, bs, G, h);
      out.com_constrained_steps.push_back(i);
    }
  }

  for (int i = 0; i <= T; ++i) {
    out.block_map.push_back(i);
    out.z_map.push_back({3 * static_cast<Index>(i), 3 * static_cast<Index>(i) + 1, 3 * static_cast<Index>(i) + 2});
  }
  out.dt_certificate = dt_certificate_for(loco, s);
  return out;
}

DtCertificate dt_condition(const LocomotionSpec& loco) { return compile(loco).dt_certificate; }

std::vector<Vec3> momentum_from_z(const Vec& z) {
  std::vector<Vec3> k;
  Vec3 acc = Vec3::Zero();
  for (Index t = 0; t + 2 < z.size(); t += 3) {
    acc += z.segment<3>(t);
    k.push_back(acc);
  }
  return k;
}

}  // namespace maqp
