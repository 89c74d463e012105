#include "maqp/rate.hpp"

#include <cmath>

namespace maqp {

RateFit estimate_rate(const std::vector<double>& gaps, double window_fraction) {
  if (static_cast<int>(gaps.size()) < kMinHistory)
    throw InsufficientDataError("rate fit needs at least " + std::to_string(kMinHistory) +
                                " iterations, got " + std::to_string(gaps.size()));
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw InsufficientDataError("window fraction must lie in (0, 1]");
  size_t usable = 0;
  while (usable < gaps.size() && std::isfinite(gaps[usable]) && gaps[usable] > kGapFloor)
    ++usable;
  if (usable < 3)
    throw InsufficientDataError("only " + std::to_string(usable) +
                                " iterations have a gap above the floor");
  size_t count = static_cast<size_t>(std::ceil(window_fraction * static_cast<double>(usable)));
  count = std::clamp<size_t>(count, 3, usable);
  const size_t first = usable - count;

  double sk = 0, sy = 0;
  for (size_t k = first; k < usable; ++k) {
    sk += static_cast<double>(k);
    sy += std::log10(gaps[k]);
  }
  const double n = static_cast<double>(count);
  const double mk = sk / n, my = sy / n;
  double skk = 0, sky = 0, syy = 0;
  for (size_t k = first; k < usable; ++k) {
    const double dk = static_cast<double>(k) - mk;
    const double dy = std::log10(gaps[k]) - my;
    skk += dk * dk;
    sky += dk * dy;
    syy += dy * dy;
  }
  RateFit fit;
  const double b = sky / skk;
  fit.slope = -b;
  fit.intercept = my - b * mk;
  fit.r2 = syy > 0.0 ? (sky * sky) / (skk * syy) : 1.0;
  fit.contraction = std::pow(10.0, fit.slope);
  fit.points = static_cast<int>(count);
  fit.first_k = static_cast<int>(first);
  fit.last_k = static_cast<int>(usable - 1);
  return fit;
}

std::vector<double> gaps(const std::vector<IterationRecord>& history, long double l_star) {
  std::vector<double> g;
  g.reserve(history.size());
  for (const auto& r : history) g.push_back(static_cast<double>(r.lagrangian_ext - l_star));
  return g;
}

RateFit estimate_rate(const std::vector<IterationRecord>& history, long double l_star,
                      double window_fraction) {
  return estimate_rate(gaps(history, l_star), window_fraction);
}

}  // namespace maqp
