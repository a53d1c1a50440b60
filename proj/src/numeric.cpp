#include "stockstat/numeric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace stockstat {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("fit_line: x and y differ in length");
  }
  const std::size_t n = x.size();
  if (n < 2) {
    throw std::invalid_argument("fit_line: need at least two points");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("fit_line: x values are all equal");
  }
  LinearFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) {
    const double s2 = sse / static_cast<double>(n - 2);
    fit.slope_stderr = std::sqrt(s2 / sxx);
    fit.intercept_stderr =
        std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  } else {
    fit.slope_stderr = std::numeric_limits<double>::quiet_NaN();
    fit.intercept_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

QuadraticFit fit_quadratic(std::span<const double> x,
                           std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("fit_quadratic: x and y differ in length");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 3) {
    throw std::invalid_argument("fit_quadratic: need at least three points");
  }
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    A(i, 0) = xi * xi;
    A(i, 1) = xi;
    A(i, 2) = 1.0;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const auto qr = A.colPivHouseholderQr();
  if (qr.rank() < 3) {
    throw std::invalid_argument("fit_quadratic: fewer than 3 distinct x");
  }
  const Eigen::Vector3d c = qr.solve(b);
  const Eigen::VectorXd r = b - A * c;
  const double sse = r.squaredNorm();
  const double ym = b.mean();
  const double syy = (b.array() - ym).square().sum();

  QuadraticFit fit;
  for (int k = 0; k < 3; ++k) fit.coef[static_cast<std::size_t>(k)] = c(k);
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (n > 3) {
    const Eigen::Matrix3d cov =
        (A.transpose() * A).inverse() * (sse / static_cast<double>(n - 3));
    for (int k = 0; k < 3; ++k) {
      fit.std_error[static_cast<std::size_t>(k)] = std::sqrt(cov(k, k));
    }
  } else {
    fit.std_error.fill(std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi,
                                          std::size_t count) {
  if (lo == 0 || hi < lo || count == 0) {
    throw std::invalid_argument("log_spaced_sizes: need 0 < lo <= hi, count > 0");
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  const double a = std::log(static_cast<double>(lo));
  const double b = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) /
                                             static_cast<double>(count - 1);
    const auto s = static_cast<std::size_t>(std::llround(std::exp(a + f * (b - a))));
    const std::size_t clamped = std::clamp(s, lo, hi);
    if (out.empty() || clamped > out.back()) out.push_back(clamped);
  }
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace stockstat
