#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stockstat/numeric.hpp"

using namespace stockstat;

TEST_CASE("fit_line recovers an exact line") {
  std::vector<double> x{0, 1, 2, 3, 4}, y;
  for (double v : x) y.push_back(2.5 * v - 1.0);
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.slope_stderr < 1e-12);
}

TEST_CASE("fit_line standard error against the textbook formula") {
  std::vector<double> x{1, 2, 3, 4, 5, 6}, y{1.1, 1.9, 3.2, 3.8, 5.3, 5.9};
  const auto f = fit_line(x, y);
  // independent computation: s^2 / Sxx
  double mx = 3.5, sxx = 0, sxy = 0, my = 0;
  for (double v : y) my += v;
  my /= 6;
  for (int i = 0; i < 6; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx, a = my - b * mx;
  double rss = 0;
  for (int i = 0; i < 6; ++i) rss += std::pow(y[i] - a - b * x[i], 2);
  CHECK(f.slope == doctest::Approx(b).epsilon(1e-12));
  CHECK(f.slope_stderr == doctest::Approx(std::sqrt(rss / 4 / sxx)).epsilon(1e-10));
}

TEST_CASE("fit_line with two points has undefined errors") {
  std::vector<double> x{0, 1}, y{0, 2};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(std::isnan(f.slope_stderr));
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 1}, std::vector<double>{0, 1}), std::invalid_argument);
}

TEST_CASE("fit_quadratic recovers coefficients") {
  std::vector<double> x, y;
  for (int i = -5; i <= 5; ++i) {
    x.push_back(i);
    y.push_back(-0.02 * i * i + 0.5 * i - 1.0);
  }
  const auto q = fit_quadratic(x, y);
  CHECK(q.coef[0] == doctest::Approx(-0.02).epsilon(1e-12));
  CHECK(q.coef[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.coef[2] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("log_spaced_sizes is strictly increasing and spans the range") {
  const auto s = log_spaced_sizes(10, 13107, 20);
  CHECK(s.front() == 10);
  CHECK(s.back() == 13107);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
  const auto dup = log_spaced_sizes(2, 5, 20);
  CHECK(dup.size() == 4);
}

TEST_CASE("moments") {
  std::vector<double> v{1, 2, 3, 4};
  CHECK(mean(v) == 2.5);
  CHECK(variance(v) == doctest::Approx(1.25));
  CHECK(sample_stddev(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
}
