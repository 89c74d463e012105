#include <Eigen/QR>

#include <cmath>

#include "maqp/subproblem.hpp"

namespace maqp {

namespace {

constexpr int kHildrethCap = 100000;

// Exact projection onto {G_A u = h_A} for the rows flagged in `active`.
// Returns false when the result violates another row or has a negative multiplier.
bool polish(const Mat& G, const Vec& h, const Vec& v, const std::vector<Index>& active,
            double tol, Vec& out) {
  const Index k = static_cast<Index>(active.size());
  if (k == 0) return false;
  Mat GA(k, G.cols());
  Vec hA(k);
  for (Index i = 0; i < k; ++i) {
    GA.row(i) = G.row(active[static_cast<size_t>(i)]);
    hA(i) = h(active[static_cast<size_t>(i)]);
  }
  const Mat K = GA * GA.transpose();
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  const Vec mu = cod.solve(GA * v - hA);
  if ((mu.array() < -tol).any()) return false;
  Vec u = v - GA.transpose() * mu;
  if (((G * u - h).array() > tol).any()) return false;
  out = std::move(u);
  return true;
}

bool polyhedron_feasible(const Mat& G, const Vec& h) {
  const double scale = 1e-9 * (1.0 + h.cwiseAbs().maxCoeff());
  const double L = (G.transpose() * G).eval().trace();
  if (L == 0.0) return (h.array() >= -scale).all();
  Vec v = Vec::Zero(G.cols());
  for (int it = 0; it < 10000; ++it) {
    Vec viol = (G * v - h).cwiseMax(0.0);
    if (viol.maxCoeff() <= scale) return true;
    v -= (G.transpose() * viol) / L;
  }
  return ((G * v - h).array() <= scale).all();
}

Vec project_polyhedron(const PolyhedronSet& p, const Vec& v) {
  const Mat& G = p.G;
  const Vec& h = p.h;
  const Index m = G.rows();
  if (m == 0 || ((G * v - h).array() <= 0.0).all()) return v;
  const double tol = 1e-12 * (1.0 + v.norm() + h.cwiseAbs().maxCoeff());

  Vec n2(m);
  for (Index r = 0; r < m; ++r) {
    n2(r) = G.row(r).squaredNorm();
    if (n2(r) == 0.0 && h(r) < 0.0)
      throw EmptySetError("polyhedron has a row 0 <= " + std::to_string(h(r)));
  }

  // Hildreth's dual coordinate ascent, with periodic exact active-set polishing.
  Vec lambda = Vec::Zero(m);
  Vec u = v;
  Vec out;
  int next_polish = 1;
  for (int sweep = 1; sweep <= kHildrethCap; ++sweep) {
    for (Index r = 0; r < m; ++r) {
      if (n2(r) == 0.0) continue;
      const double viol = G.row(r).dot(u) - h(r);
      const double delta = std::max(-lambda(r), viol / n2(r));
      if (delta == 0.0) continue;
      lambda(r) += delta;
      u.noalias() -= delta * G.row(r).transpose();
    }
    const Vec slack = G * u - h;
    double primal = slack.cwiseMax(0.0).maxCoeff();
    double comp = (lambda.array() * slack.array().abs()).maxCoeff();
    if (primal <= tol && comp <= tol) return u;
    if (sweep == next_polish || sweep % 16 == 0) {
      next_polish *= 2;
      std::vector<Index> active;
      for (Index r = 0; r < m; ++r)
        if (lambda(r) > 0.0) active.push_back(r);
      if (polish(G, h, v, active, tol, out)) return out;
    }
    if (!std::isfinite(lambda.sum()) || lambda.maxCoeff() > 1e15) break;
  }
  if (!polyhedron_feasible(G, h)) throw EmptySetError("polyhedron is empty");
  return u;
}

}  // namespace

Vec project(const IndicatorSet& set, const Vec& v) {
  if (const auto* b = std::get_if<BoxSet>(&set)) {
    if (b->lower.size() != v.size())
      throw DimensionError("box has dimension " + std::to_string(b->lower.size()) +
                           ", vector has " + std::to_string(v.size()));
    if (!(b->lower.array() <= b->upper.array()).all())
      throw EmptySetError("box has lower > upper");
    return v.cwiseMax(b->lower).cwiseMin(b->upper);
  }
  if (const auto* p = std::get_if<PolyhedronSet>(&set)) {
    if (p->G.cols() != v.size() || p->h.size() != p->G.rows())
      throw DimensionError("polyhedron dimension mismatch");
    return project_polyhedron(*p, v);
  }
  return v;
}

}  // namespace maqp
