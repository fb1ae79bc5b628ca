#pragma once

#include <optional>
#include <span>
#include <vector>

namespace ltc::fit {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the fit.
  double rms = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs >= 2 distinct x.
LineFit linear(std::span<const double> x, std::span<const double> y);

/// Least squares through the origin: y = slope * x (intercept fixed at 0).
LineFit proportional(std::span<const double> x, std::span<const double> y);

/// Exponent p of |y| ~ c x^p from a log-log fit over entries with |y| > floor.
/// Empty when fewer than two entries survive the floor.
std::optional<LineFit> power_law(std::span<const double> x, std::span<const double> y,
                                 double floor);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace ltc::fit
