#pragma once

#include <vector>

#include "maqp/admm.hpp"

namespace maqp {

/// Log-linear fit of a gap sequence.
struct RateFit {
  /// Decay of log10(gap) per iteration; positive for a shrinking gap.
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Per-iteration contraction 10^slope, so gap = 2^-k gives 2.
  double contraction = 1.0;
  int points = 0;
  int first_k = 0;
  int last_k = 0;

  /// R^2 >= 0.98 and positive slope.
  bool linear() const { return r2 >= 0.98 && slope > 0.0; }
};

inline constexpr double kGapFloor = 1e-13;
inline constexpr int kMinHistory = 20;

/// Fits log10(gap[k]) against k. Only the leading run of entries with
/// gap > 1e-13 is used, and of those the last `window_fraction` (at least 3).
/// Throws InsufficientDataError for fewer than 20 entries or 3 usable points.
RateFit estimate_rate(const std::vector<double>& gaps, double window_fraction = 0.5);

/// Same fit on L^k - l_star from a history.
RateFit estimate_rate(const std::vector<IterationRecord>& history, long double l_star,
                      double window_fraction = 0.5);

/// L^k - l_star from the extended-precision Lagrangian.
std::vector<double> gaps(const std::vector<IterationRecord>& history, long double l_star);

}  // namespace maqp
