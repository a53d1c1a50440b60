#include "stockstat/detrend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "stockstat/errors.hpp"
#include "stockstat/numeric.hpp"

namespace stockstat {

double kurtosis(std::span<const double> samples) {
  if (samples.size() < 4) {
    throw std::invalid_argument("kurtosis: need at least 4 samples");
  }
  const double m = mean(samples);
  double m2 = 0.0, m4 = 0.0;
  for (double x : samples) {
    const double u = x - m;
    const double u2 = u * u;
    m2 += u2;
    m4 += u2 * u2;
  }
  const auto n = static_cast<double>(samples.size());
  m2 /= n;
  m4 /= n;
  // Relative test: a constant window can leave rounding residue in m2.
  if (!(m2 > 0.0) || m2 <= 1e-28 * m * m) {
    throw DegenerateWindowError("kurtosis: zero variance (constant window)", 0);
  }
  return m4 / (m2 * m2);
}

WindowKurtosis mean_kurtosis_over_windows(std::span<const double> values,
                                          std::size_t window,
                                          KurtosisInput input) {
  if (window < 4) {
    throw std::invalid_argument("mean_kurtosis_over_windows: window must be >= 4");
  }
  const std::size_t n = values.size() / window;
  if (n < 1) {
    throw std::invalid_argument("mean_kurtosis_over_windows: window longer than series");
  }
  std::vector<double> k(n);
  std::vector<double> diffs;
  for (std::size_t j = 0; j < n; ++j) {
    auto w = values.subspan(j * window, window);
    try {
      if (input == KurtosisInput::Differences) {
        diffs.resize(window - 1);
        for (std::size_t i = 1; i < window; ++i) diffs[i - 1] = w[i] - w[i - 1];
        k[j] = kurtosis(diffs);
      } else {
        k[j] = kurtosis(w);
      }
    } catch (const DegenerateWindowError&) {
      throw DegenerateWindowError(
          "degenerate window " + std::to_string(j) + " of size " +
              std::to_string(window) + " (zero variance)",
          j);
    }
  }
  WindowKurtosis r;
  r.windows = n;
  r.mean = mean(k);
  r.std_error = n > 1 ? sample_stddev(k) / std::sqrt(static_cast<double>(n))
                   : std::numeric_limits<double>::quiet_NaN();
  return r;
}

WindowKurtosis mean_kurtosis_over_windows(const PriceSeries& series,
                                          std::size_t window,
                                          KurtosisInput input) {
  return mean_kurtosis_over_windows(series.prices(), window, input);
}

WindowScanResult scan_optimal_window(std::span<const double> values,
                                     std::span<const std::size_t> windows,
                                     double target, KurtosisInput input) {
  if (windows.empty()) {
    throw std::invalid_argument("scan_optimal_window: no candidate windows");
  }
  if (!(target > 0.0)) {
    throw std::invalid_argument("scan_optimal_window: target must be > 0");
  }
  WindowScanResult r;
  r.candidate_windows.assign(windows.begin(), windows.end());
  std::sort(r.candidate_windows.begin(), r.candidate_windows.end());
  r.candidate_windows.erase(
      std::unique(r.candidate_windows.begin(), r.candidate_windows.end()),
      r.candidate_windows.end());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<DegenerateWindowError> last_error;
  for (std::size_t w : r.candidate_windows) {
    if (w < 4) throw std::invalid_argument("scan_optimal_window: windows must be >= 4");
    try {
      const auto wk = mean_kurtosis_over_windows(values, w, input);
      r.mean_kurtosis.push_back(wk.mean);
      r.std_error.push_back(wk.std_error);
    } catch (const DegenerateWindowError& e) {
      last_error = e;
      r.mean_kurtosis.push_back(nan);
      r.std_error.push_back(nan);
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.candidate_windows.size(); ++i) {
    const double k = r.mean_kurtosis[i];
    if (std::isnan(k)) continue;
    if (std::abs(k - target) <= r.std_error[i]) {
      r.optimal_window = r.candidate_windows[i];
      r.qualified = true;
      return r;
    }
    if (!best || std::abs(k - target) < std::abs(r.mean_kurtosis[*best] - target)) {
      best = i;
    }
  }
  if (!best) {
    throw last_error.value_or(
        DegenerateWindowError("scan_optimal_window: all candidates degenerate", 0));
  }
  r.optimal_window = r.candidate_windows[*best];
  r.qualified = false;
  return r;
}

std::vector<double> moving_average_trend(std::span<const double> series,
                                         std::size_t window, int poly_order,
                                         EdgeMode edge) {
  const std::size_t n = series.size();
  if (window < 1 || window > n) {
    throw std::invalid_argument("moving_average_trend: need 1 <= window <= N");
  }
  if (poly_order != 0 && poly_order != 1) {
    throw std::invalid_argument("moving_average_trend: poly_order must be 0 or 1");
  }
  if (poly_order == 1 && edge == EdgeMode::NominalWindow) {
    throw std::invalid_argument(
        "moving_average_trend: nominal-window edges are defined for order 0 only");
  }

  // Prefix sums in extended precision; window sums are differences of
  // values that can reach N * max|I|.
  std::vector<long double> s0(n + 1, 0.0L), s1;
  for (std::size_t i = 0; i < n; ++i) s0[i + 1] = s0[i] + series[i];
  if (poly_order == 1) {
    s1.assign(n + 1, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      s1[i + 1] = s1[i] + static_cast<long double>(i) * series[i];
    }
  }

  const std::size_t back = (window - 1) / 2;        // floor((w-1)/2)
  const std::size_t ahead = window - 1 - back;      // ceil((w-1)/2)
  std::vector<double> trend(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= back ? t - back : 0;
    const std::size_t hi = std::min(t + ahead, n - 1);
    const auto count = static_cast<long double>(hi - lo + 1);
    const long double sum = s0[hi + 1] - s0[lo];
    if (poly_order == 0) {
      const long double denom =
          edge == EdgeMode::NominalWindow ? static_cast<long double>(window) : count;
      trend[t] = static_cast<double>(sum / denom);
      continue;
    }
    if (hi == lo) {
      trend[t] = series[t];
      continue;
    }
    // Line fit over indices lo..hi, evaluated at t.
    const long double sx = s1[hi + 1] - s1[lo];
    const long double a = static_cast<long double>(lo);
    const long double b = static_cast<long double>(hi);
    const long double xbar = (a + b) / 2.0L;
    const long double sxx = count * (count * count - 1.0L) / 12.0L;
    const long double ybar = sum / count;
    const long double slope = (sx - xbar * sum) / sxx;
    trend[t] = static_cast<double>(ybar + slope * (static_cast<long double>(t) - xbar));
  }
  return trend;
}

DetrendResult detrend(std::span<const double> series, std::span<const double> trend) {
  if (series.size() != trend.size()) {
    throw std::invalid_argument("detrend: series and trend differ in length");
  }
  DetrendResult r;
  r.trend.assign(trend.begin(), trend.end());
  r.fluctuation.resize(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    r.fluctuation[i] = series[i] - trend[i];
  }
  return r;
}

DetrendResult detrend_moving_average(std::span<const double> series,
                                     std::size_t window, int poly_order,
                                     EdgeMode edge) {
  const auto trend = moving_average_trend(series, window, poly_order, edge);
  auto r = detrend(series, trend);
  r.window = window;
  r.poly_order = poly_order;
  return r;
}

std::vector<double> detrended_return(std::span<const double> fluctuation,
                                     std::size_t lag) {
  if (lag < 1 || lag >= fluctuation.size()) {
    throw std::invalid_argument("detrended_return: need 1 <= lag < length");
  }
  std::vector<double> x(fluctuation.size() - lag);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = fluctuation[t + lag] - fluctuation[t];
  }
  return x;
}

}  // namespace stockstat
