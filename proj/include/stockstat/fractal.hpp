#pragma once

// Detrended fluctuation analysis of a profile (the detrended price I*),
// its generalisation to moment orders w (MF-DFA), box-probability moments
// G_w(s) and the multifractal stationarity check tau(w) = w h(w) - 1.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace stockstat {

/// F^2(v, s) for v = 1..floor(N/s): variance of each length-s segment about
/// its own mean. Trailing samples that do not fill a segment are ignored.
std::vector<double> segment_variances(std::span<const double> profile, std::size_t s);

/// F_w(s) = { mean_v [F^2(v,s)]^(w/2) }^(1/w), w != 0. For w < 0
/// zero-variance segments are left out.
double fluctuation_function(std::span<const double> profile, std::size_t s, double w);

/// The w -> 0 limit, exp(mean_v ln F(v,s)), over non-zero segments.
double fluctuation_function_log(std::span<const double> profile, std::size_t s);

/// p_s(v) = I*[v s] - I*[(v-1) s] (0-based, so the first sample is I*(0)),
/// v = 1..floor((N-1)/s). Each box spans exactly s increments.
std::vector<double> box_probabilities(std::span<const double> profile, std::size_t s);

struct MomentSum {
  double value = 0.0;            ///< sum over boxes of |p|^w
  std::size_t boxes = 0;         ///< boxes that contributed
  std::size_t zeros_excluded = 0;
};

/// G_w(s) = sum_v |p_s(v)|^w. For w < 0 boxes with p = 0 are excluded and
/// counted; w = 0 gives the box count.
MomentSum generalized_moments(std::span<const double> profile, std::size_t s, double w);

/// F and G on a (order x scale) grid, together with per-block partial sums
/// used for block-jackknife error bars. Segments are grouped into
/// `blocks` contiguous blocks at every scale.
struct FluctuationSpectrum {
  std::vector<std::size_t> scales;
  std::vector<double> orders;
  std::vector<std::vector<double>> F;  ///< F[order][scale]
  std::vector<std::vector<double>> G;  ///< G[order][scale]
  std::vector<std::vector<std::size_t>> zeros_excluded;  ///< [order][scale], boxes with p = 0

  std::size_t blocks = 0;
  // [order][scale][block] partial sums of [F^2]^(w/2) and |p|^w, with counts
  std::vector<std::vector<std::vector<double>>> f_block_sum, g_block_sum;
  std::vector<std::vector<std::vector<double>>> f_block_count;
};

/// Throws std::invalid_argument for w = 0, unsorted or out-of-range scales,
/// or an order whose moments are undefined at some scale.
FluctuationSpectrum fluctuation_spectrum(std::span<const double> profile,
                                         std::vector<std::size_t> scales,
                                         std::vector<double> orders,
                                         std::size_t blocks = 10);

struct ScaleRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// 20 log-spaced scales from 10 to N/10.
std::vector<std::size_t> default_scales(std::size_t n);
/// -5..-1, 1..5
std::vector<double> default_orders();
/// [s_min sqrt(10), N/100]: drops the bottom half-decade, where segment
/// means bias F, and keeps at least 100 segments per scale. Falls back to
/// the whole grid when fewer than 4 scales lie inside.
ScaleRange default_fit_range(std::size_t n, std::span<const std::size_t> scales);

struct Exponent {
  double order = 0.0;
  double value = 0.0;             ///< OLS slope in log-log
  double std_error = 0.0;         ///< OLS standard error
  double jackknife_stderr = 0.0;  ///< delete-one-block jackknife
  double r_squared = 0.0;
  bool linear = false;            ///< r_squared >= threshold
  std::size_t points = 0;
  std::vector<double> replicates;  ///< slope with each block removed
};

/// h(w): slope of log F_w(s) against log s over `range`.
/// Needs >= 4 scales inside the range.
std::vector<Exponent> dfa_hurst(const FluctuationSpectrum& spectrum,
                                ScaleRange range, double r2_min = 0.98);
/// tau(w): slope of log G_w(s) against log s over `range`.
std::vector<Exponent> gdfa_tau(const FluctuationSpectrum& spectrum,
                               ScaleRange range, double r2_min = 0.98);

std::vector<Exponent> dfa_hurst(std::span<const double> profile,
                                std::vector<std::size_t> scales,
                                std::vector<double> orders, ScaleRange range);
std::vector<Exponent> gdfa_tau(std::span<const double> profile,
                               std::vector<std::size_t> scales,
                               std::vector<double> orders, ScaleRange range);

struct HurstLineFit {
  double a1 = 0.0, b1 = 0.0;    ///< h(w) ~ a1 w + b1
  double a1_stderr = 0.0;       ///< OLS, treats h(w) as independent
  double a1_jackknife_stderr = 0.0;
  double b1_stderr = 0.0;
  double r_squared = 0.0;
};

struct TauQuadraticFit {
  double a2 = 0.0, b2 = 0.0, c2 = 0.0;  ///< tau(w) ~ a2 w^2 + b2 w + c2
  double a2_stderr = 0.0, b2_stderr = 0.0, c2_stderr = 0.0;
  double r_squared = 0.0;
};

struct MultifractalVerdict {
  std::vector<double> orders;
  std::vector<double> deviations;     ///< |tau(w) - (w h(w) - 1)| per order
  std::vector<double> verdict_orders; ///< orders that enter max_deviation
  double max_deviation = 0.0;
  double tolerance = 0.1;
  bool stationary = false;
  HurstLineFit h_fit;
  TauQuadraticFit tau_fit;
  double monofractal_z = 2.0;
  bool monofractal = false;  ///< |a1| <= z * jackknife stderr
  bool all_linear = false;
};

/// Test 1. `verdict_orders` selects the orders whose deviation decides the
/// verdict (empty: the positive orders; below w = 0 the moments of signed
/// increments are dominated by near-zero boxes and the relation does not
/// hold even for iid data). Deviations are reported for every order.
MultifractalVerdict stationarity_test_multifractal(
    const std::vector<Exponent>& h, const std::vector<Exponent>& tau,
    double tolerance = 0.1, std::vector<double> verdict_orders = {},
    double monofractal_z = 2.0);

struct FractalConfig {
  std::vector<std::size_t> scales;  ///< empty: default_scales
  std::vector<double> orders;       ///< empty: default_orders
  std::optional<ScaleRange> fit_range;
  double r2_min = 0.98;
  double tolerance = 0.1;
  std::vector<double> verdict_orders;
  std::size_t jackknife_blocks = 10;
  double monofractal_z = 2.0;
};

struct ScalingFit {
  FluctuationSpectrum spectrum;
  ScaleRange fit_range;
  std::vector<Exponent> h;
  std::vector<Exponent> tau;
  MultifractalVerdict verdict;
};

ScalingFit analyze_multifractal(std::span<const double> profile,
                                const FractalConfig& config = {});

}  // namespace stockstat
