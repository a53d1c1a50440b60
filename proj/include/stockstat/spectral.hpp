#pragma once

// Autocorrelation, periodogram, Savitzky-Golay smoothing and the
// Wiener-Khinchin stationarity check (test 2). Frequencies are in cycles
// per sample throughout.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stockstat {

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double exponent_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct FitInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// y = prefactor * x^exponent by least squares in log-log over the points
/// with lo <= x <= hi. Needs >= 4 points there, all positive.
PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys,
                          FitInterval range);

enum class AcfMode {
  /// <(x_t - mu)(x_{t+s} - mu)> / sigma^2
  MeanSubtracted,
  /// <x_t x_{t+s}> / sigma^2 (no mean removed in the numerator)
  RawProduct,
};

struct AcfResult {
  std::vector<std::size_t> lags;
  std::vector<double> values;
  /// Power law fitted over one decade from the first lag with C < 1/e;
  /// empty when that range runs past max_lag or holds non-positive values.
  std::optional<PowerLawFit> gamma_fit;
  std::size_t transition_lag = 0;  ///< first lag with C < 1/e, 0 if none
  std::string gamma_note;          ///< why gamma_fit is empty
};

/// Biased (divide by N) autocovariance for lags 0..max_lag, via FFT.
std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag,
                                   bool subtract_mean = true);

/// C(s) for s = 0..max_lag. Throws for max_lag >= N or zero variance.
AcfResult autocorrelation(std::span<const double> x, std::size_t max_lag,
                          AcfMode mode = AcfMode::MeanSubtracted,
                          double transition_decades = 1.0);

struct Spectrum {
  std::vector<double> frequencies;  ///< k / N, k = 0..N/2
  std::vector<double> values;
  std::string smoothing = "none";
};

/// |x̂(f)|^2 with x̂(f) = N^(-1/2) sum_t x_t exp(-2 pi i f t), on the
/// non-negative half of the DFT grid. Needs N >= 2.
Spectrum power_spectrum(std::span<const double> x);

/// Circular autocovariance (1/N) sum_t x_t x_{(t+s) mod N}, s = 0..N-1.
std::vector<double> circular_autocovariance(std::span<const double> x);

/// Fourier transform of a full circular autocovariance sequence on the
/// half grid. Applied to circular_autocovariance(x) it reproduces
/// power_spectrum(x) exactly.
Spectrum acf_spectrum(std::span<const double> circular_acov);

/// Weights of the least-squares polynomial of `degree` over `window`
/// points, evaluated at index `position` within the window
/// (window / 2 is the centre).
std::vector<double> savitzky_golay_coefficients(std::size_t window, std::size_t degree,
                                                std::size_t position);

/// Savitzky-Golay smoothing. The first and last window/2 samples use the
/// fit over the first (last) full window evaluated off-centre.
/// Needs odd window >= 3, degree < window and signal.size() >= window.
std::vector<double> savitzky_golay(std::span<const double> signal, std::size_t window,
                                   std::size_t degree);

/// Converts a physical frequency to cycles per sample.
double hz_to_cycles_per_sample(double hz, double sample_seconds = 60.0);

/// Odd bin count >= 3 closest to width * n.
std::size_t smoothing_bins(double width_cycles_per_sample, std::size_t n);

struct WienerKhinchinOptions {
  /// smoothing width in cycles/sample: 3.97e-5 Hz at one sample per minute
  double smoothing_width = 3.97e-5 * 60.0;
  std::size_t smoothing_window = 0;  ///< bins; overrides smoothing_width when > 0
  std::size_t degree = 1;
  std::size_t max_lag = 0;           ///< 0: N / smoothing_window
  double tolerance = 0.15;
  std::size_t band_points = 200;
};

struct WienerKhinchinVerdict {
  Spectrum periodogram;       ///< |x̂|^2, raw
  Spectrum acf_transform;     ///< FT of the lag-truncated autocovariance
  std::vector<double> smoothed_periodogram;
  std::vector<double> smoothed_acf_transform;
  std::vector<std::size_t> band;  ///< bins entering the median
  double median_deviation = 0.0;  ///< median |ln(P_s / S_s)| over the band
  double tolerance = 0.15;
  bool stationary = false;
  std::size_t smoothing_window = 0;
  std::size_t max_lag = 0;
};

/// Test 2: compares the smoothed periodogram with the smoothed Fourier
/// transform of the autocovariance truncated at max_lag. A non-positive
/// smoothed value counts as an infinite deviation. Needs N >= 1024.
WienerKhinchinVerdict wiener_khinchin_test(std::span<const double> x,
                                           const WienerKhinchinOptions& options = {});

}  // namespace stockstat
