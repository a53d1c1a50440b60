#include "stockstat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "stockstat/fft.hpp"
#include "stockstat/numeric.hpp"

namespace stockstat {

PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys,
                          FitInterval range) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] >= range.lo && xs[i] <= range.hi)) continue;
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument("fit_power_law: non-positive data in range");
    }
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  if (lx.size() < 4) throw std::invalid_argument("fit_power_law: fewer than 4 points in range");
  const LinearFit lf = fit_line(lx, ly);
  PowerLawFit out;
  out.exponent = lf.slope;
  out.prefactor = std::exp(lf.intercept);
  out.exponent_stderr = lf.slope_stderr;
  out.r_squared = lf.r_squared;
  out.points = lx.size();
  return out;
}

std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag,
                                   bool subtract_mean) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("autocovariance: need at least 2 samples");
  if (max_lag >= n) throw std::invalid_argument("autocovariance: max_lag must be < length");
  std::vector<double> c(x.begin(), x.end());
  if (subtract_mean) {
    const double m = mean(x);
    for (auto& v : c) v -= m;
  }
  // zero padding to 2N turns the circular correlation into the linear one
  auto X = fft::rfft(c, 2 * n);
  for (auto& z : X) z = std::norm(z);
  auto r = fft::irfft(X, 2 * n);
  r.resize(max_lag + 1);
  for (auto& v : r) v /= static_cast<double>(n);
  return r;
}

AcfResult autocorrelation(std::span<const double> x, std::size_t max_lag, AcfMode mode,
                          double transition_decades) {
  const double var = x.size() >= 2 ? variance(x) : 0.0;
  if (!(var > 0.0)) throw std::invalid_argument("autocorrelation: zero variance");
  const auto cov = autocovariance(x, max_lag, mode == AcfMode::MeanSubtracted);
  AcfResult r;
  r.lags.resize(max_lag + 1);
  r.values.resize(max_lag + 1);
  for (std::size_t s = 0; s <= max_lag; ++s) {
    r.lags[s] = s;
    r.values[s] = cov[s] / var;
  }
  if (mode == AcfMode::MeanSubtracted) r.values[0] = 1.0;

  for (std::size_t s = 1; s <= max_lag; ++s) {
    if (r.values[s] < std::exp(-1.0)) {
      r.transition_lag = s;
      break;
    }
  }
  if (r.transition_lag == 0) {
    r.gamma_note = "correlation never drops below 1/e";
    return r;
  }
  const double lo = static_cast<double>(r.transition_lag);
  const double hi = lo * std::pow(10.0, transition_decades);
  if (hi > static_cast<double>(max_lag)) {
    r.gamma_note = "transition range exceeds max_lag";
    return r;
  }
  std::vector<double> xs(r.lags.begin(), r.lags.end());
  try {
    r.gamma_fit = fit_power_law(xs, r.values, {lo, hi});
  } catch (const std::invalid_argument& e) {
    r.gamma_note = e.what();
  }
  return r;
}

Spectrum power_spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("power_spectrum: need at least 2 samples");
  const auto X = fft::rfft(x);
  Spectrum sp;
  sp.frequencies.resize(X.size());
  sp.values.resize(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) {
    sp.frequencies[k] = static_cast<double>(k) / static_cast<double>(n);
    sp.values[k] = std::norm(X[k]) / static_cast<double>(n);
  }
  return sp;
}

std::vector<double> circular_autocovariance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("circular_autocovariance: need at least 2 samples");
  auto X = fft::rfft(x);
  for (auto& z : X) z = std::norm(z);
  auto r = fft::irfft(X, n);
  for (auto& v : r) v /= static_cast<double>(n);
  return r;
}

Spectrum acf_spectrum(std::span<const double> acov) {
  const std::size_t n = acov.size();
  if (n < 2) throw std::invalid_argument("acf_spectrum: need at least 2 lags");
  const auto C = fft::rfft(acov);
  Spectrum sp;
  sp.frequencies.resize(C.size());
  sp.values.resize(C.size());
  for (std::size_t k = 0; k < C.size(); ++k) {
    sp.frequencies[k] = static_cast<double>(k) / static_cast<double>(n);
    sp.values[k] = C[k].real();
  }
  return sp;
}

std::vector<double> savitzky_golay_coefficients(std::size_t window, std::size_t degree,
                                                std::size_t position) {
  if (window < 1 || degree >= window) {
    throw std::invalid_argument("savitzky_golay: degree must be below the window length");
  }
  if (position >= window) throw std::invalid_argument("savitzky_golay: position outside window");
  const auto W = static_cast<Eigen::Index>(window);
  const auto P = static_cast<Eigen::Index>(degree + 1);
  // abscissae centred on the evaluation point, scaled to keep the
  // Vandermonde matrix well conditioned
  const double scale = std::max(1.0, 0.5 * static_cast<double>(window - 1));
  Eigen::MatrixXd A(W, P);
  for (Eigen::Index i = 0; i < W; ++i) {
    const double u = (static_cast<double>(i) - static_cast<double>(position)) / scale;
    double p = 1.0;
    for (Eigen::Index j = 0; j < P; ++j) {
      A(i, j) = p;
      p *= u;
    }
  }
  // the fitted value at u = 0 is the constant term: row 0 of pinv(A)
  const Eigen::MatrixXd pinv =
      A.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(W, W));
  std::vector<double> c(window);
  for (Eigen::Index i = 0; i < W; ++i) c[static_cast<std::size_t>(i)] = pinv(0, i);
  return c;
}

std::vector<double> savitzky_golay(std::span<const double> signal, std::size_t window,
                                   std::size_t degree) {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("savitzky_golay: window must be odd and >= 3");
  }
  if (degree >= window) {
    throw std::invalid_argument("savitzky_golay: degree must be below the window length");
  }
  if (signal.size() < window) {
    throw std::invalid_argument("savitzky_golay: window wider than the signal");
  }
  const std::size_t n = signal.size(), h = window / 2;
  std::vector<double> out(n);
  const auto centre = savitzky_golay_coefficients(window, degree, h);
  for (std::size_t i = h; i + h < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < window; ++j) s += centre[j] * signal[i - h + j];
    out[i] = s;
  }
  for (std::size_t i = 0; i < h; ++i) {
    const auto head = savitzky_golay_coefficients(window, degree, i);
    const auto tail = savitzky_golay_coefficients(window, degree, window - 1 - i);
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      a += head[j] * signal[j];
      b += tail[j] * signal[n - window + j];
    }
    out[i] = a;
    out[n - 1 - i] = b;
  }
  return out;
}

double hz_to_cycles_per_sample(double hz, double sample_seconds) {
  if (!(sample_seconds > 0.0)) {
    throw std::invalid_argument("hz_to_cycles_per_sample: sample period must be positive");
  }
  return hz * sample_seconds;
}

std::size_t smoothing_bins(double width, std::size_t n) {
  if (!(width > 0.0)) throw std::invalid_argument("smoothing_bins: width must be positive");
  auto b = static_cast<std::size_t>(std::llround(width * static_cast<double>(n)));
  if (b % 2 == 0) ++b;
  return std::max<std::size_t>(b, 3);
}

WienerKhinchinVerdict wiener_khinchin_test(std::span<const double> x,
                                           const WienerKhinchinOptions& opt) {
  const std::size_t n = x.size();
  if (n < 1024) throw std::invalid_argument("wiener_khinchin_test: need at least 1024 samples");
  if (!(opt.tolerance > 0.0)) {
    throw std::invalid_argument("wiener_khinchin_test: tolerance must be positive");
  }
  WienerKhinchinVerdict v;
  v.tolerance = opt.tolerance;
  v.periodogram = power_spectrum(x);
  const std::size_t L = v.periodogram.values.size();
  v.smoothing_window =
      opt.smoothing_window > 0 ? opt.smoothing_window : smoothing_bins(opt.smoothing_width, n);
  if (v.smoothing_window % 2 == 0) ++v.smoothing_window;
  if (v.smoothing_window >= L) {
    throw std::invalid_argument("wiener_khinchin_test: smoothing window wider than the spectrum");
  }
  v.max_lag = opt.max_lag > 0 ? opt.max_lag : n / v.smoothing_window;
  v.max_lag = std::min(v.max_lag, n - 1);

  // lag-truncated even sequence on a 2N ring; even bins land on k / N
  const auto acov = autocovariance(x, v.max_lag, true);
  std::vector<double> ring(2 * n, 0.0);
  ring[0] = acov[0];
  for (std::size_t s = 1; s <= v.max_lag; ++s) {
    ring[s] = acov[s];
    ring[2 * n - s] = acov[s];
  }
  const auto C = fft::rfft(ring);
  v.acf_transform.frequencies = v.periodogram.frequencies;
  v.acf_transform.values.resize(L);
  for (std::size_t k = 0; k < L; ++k) v.acf_transform.values[k] = C[2 * k].real();

  v.smoothed_periodogram = savitzky_golay(v.periodogram.values, v.smoothing_window, opt.degree);
  v.smoothed_acf_transform =
      savitzky_golay(v.acf_transform.values, v.smoothing_window, opt.degree);

  // log-spaced band from the smoothing width up to Nyquist
  const double lo = static_cast<double>(v.smoothing_window);
  const double hi = static_cast<double>(L - 1);
  const std::size_t m = std::max<std::size_t>(opt.band_points, 2);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(m - 1);
    const auto k = static_cast<std::size_t>(std::llround(lo * std::pow(hi / lo, t)));
    if (v.band.empty() || k != v.band.back()) v.band.push_back(k);
  }
  std::vector<double> dev;
  for (auto k : v.band) {
    const double a = v.smoothed_periodogram[k], b = v.smoothed_acf_transform[k];
    dev.push_back(a > 0.0 && b > 0.0 ? std::abs(std::log(a / b))
                                     : std::numeric_limits<double>::infinity());
  }
  std::sort(dev.begin(), dev.end());
  const std::size_t d = dev.size();
  v.median_deviation = d % 2 ? dev[d / 2] : 0.5 * (dev[d / 2 - 1] + dev[d / 2]);
  v.stationary = v.median_deviation <= opt.tolerance;
  return v;
}

}  // namespace stockstat
