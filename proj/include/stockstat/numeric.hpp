#pragma once

// Small numerical helpers shared by the analysis modules: least-squares
// fits with standard errors, grids and sample moments.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace stockstat {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope * x + intercept. Needs >= 2 points and
/// non-constant x; standard errors are NaN when only two points are given.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct QuadraticFit {
  /// y ~ coef[0] * x^2 + coef[1] * x + coef[2]
  std::array<double, 3> coef{};
  std::array<double, 3> std_error{};
  double r_squared = 0.0;
};

QuadraticFit fit_quadratic(std::span<const double> x,
                           std::span<const double> y);

/// `count` integers spread logarithmically over [lo, hi], rounded, with
/// duplicates removed. Result is strictly increasing.
std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi,
                                          std::size_t count);

double mean(std::span<const double> v);

/// Population variance (divides by n).
double variance(std::span<const double> v);

/// Sample standard deviation (divides by n - 1).
double sample_stddev(std::span<const double> v);

}  // namespace stockstat
