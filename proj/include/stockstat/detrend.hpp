#pragma once

// Moving-average detrending with the kurtosis window criterion.
//
// The index I(t) is split into a trend Ĩ(t), a centered moving average over
// an overlapping window, and a fluctuation I*(t) = I(t) - Ĩ(t). The window
// is chosen by scanning candidate sizes for the smallest one whose
// window-averaged kurtosis is compatible with the Gaussian value 3.

#include <cstddef>
#include <span>
#include <vector>

#include "stockstat/market_data.hpp"

namespace stockstat {

/// <u^4> / <u^2>^2 of the mean-removed samples (plain time averages).
/// Needs >= 4 samples; zero variance raises DegenerateWindowError.
double kurtosis(std::span<const double> samples);

/// What the per-window kurtosis is computed on.
enum class KurtosisInput {
  Levels,       ///< the index values inside each window
  Differences,  ///< first differences inside each window
};

struct WindowKurtosis {
  double mean = 0.0;
  double std_error = 0.0;  ///< NaN when only one window fits
  std::size_t windows = 0;
};

/// Splits the values into floor(N / window) non-overlapping windows (the
/// remainder is dropped) and averages their kurtosis.
WindowKurtosis mean_kurtosis_over_windows(std::span<const double> values,
                                          std::size_t window,
                                          KurtosisInput input = KurtosisInput::Levels);

WindowKurtosis mean_kurtosis_over_windows(const PriceSeries& series,
                                          std::size_t window,
                                          KurtosisInput input = KurtosisInput::Levels);

struct WindowScanResult {
  std::vector<std::size_t> candidate_windows;
  std::vector<double> mean_kurtosis;  ///< NaN for degenerate candidates
  std::vector<double> std_error;
  std::size_t optimal_window = 0;
  /// True when the optimum is within one standard error of the target;
  /// false means the closest candidate was returned instead.
  bool qualified = false;
};

/// Picks the smallest candidate with |K̄ - target| <= stderr, otherwise the
/// candidate minimising |K̄ - target|. Degenerate candidates are skipped;
/// if all are degenerate the last DegenerateWindowError is rethrown.
WindowScanResult scan_optimal_window(std::span<const double> values,
                                     std::span<const std::size_t> windows,
                                     double target = 3.0,
                                     KurtosisInput input = KurtosisInput::Levels);

/// How truncated windows at the series ends are normalised.
enum class EdgeMode {
  CountNormalized,  ///< divide by the number of samples actually summed
  NominalWindow,    ///< divide by the nominal window size
};

/// Centered moving average over windows shifted by one sample. At sample t
/// (0-based) the window spans offsets -floor((w-1)/2) .. ceil((w-1)/2),
/// truncated at both ends of the series. poly_order 1 replaces the window
/// mean by a least-squares line evaluated at t (count-normalized only).
std::vector<double> moving_average_trend(std::span<const double> series,
                                         std::size_t window, int poly_order = 0,
                                         EdgeMode edge = EdgeMode::CountNormalized);

struct DetrendResult {
  std::vector<double> trend;
  std::vector<double> fluctuation;
  std::size_t window = 0;
  int poly_order = 0;
};

/// fluctuation = series - trend, elementwise.
DetrendResult detrend(std::span<const double> series, std::span<const double> trend);

/// moving_average_trend followed by detrend, with the metadata filled in.
DetrendResult detrend_moving_average(std::span<const double> series,
                                     std::size_t window, int poly_order = 0,
                                     EdgeMode edge = EdgeMode::CountNormalized);

/// x(t0) = I*(t0 + lag) - I*(t0) for every valid t0; length N - lag.
std::vector<double> detrended_return(std::span<const double> fluctuation,
                                     std::size_t lag);

}  // namespace stockstat
