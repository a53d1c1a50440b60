#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stockstat/diagnostics.hpp"
#include "stockstat/errors.hpp"
#include "stockstat/qgauss.hpp"

using namespace stockstat;

namespace {

constexpr double kPi = std::numbers::pi;

// integral of the density over [0, inf) by double-exponential quadrature
double half_mass(double q, double beta) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double x) { return qgaussian_density(x, q, beta); });
}

double cdf_by_quadrature(double x, const QGaussianModel& m, double t) {
  const double part = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double u) { return qgaussian_pdf(u, m, t); }, 0.0, std::abs(x), 15, 1e-13);
  return x >= 0 ? 0.5 + part : 0.5 - part;
}

// Kolmogorov-Smirnov distance against the library CDF
double ks_distance(std::vector<double> x, const QGaussianModel& m, double t) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = qgaussian_cdf(x[i], m, t);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

struct WarningCapture {
  std::vector<std::string> messages;
  WarningHandler previous;
  WarningCapture() {
    previous = set_warning_handler([this](std::string_view s) { messages.emplace_back(s); });
  }
  ~WarningCapture() { set_warning_handler(previous); }
};

}  // namespace

TEST_CASE("normalisation constant known values") {
  CHECK(std::abs(c_q(2.0) - kPi) < 1e-12);
  CHECK(std::abs(c_q(1.001) - std::sqrt(kPi)) < 1e-2);
  // both sides of the series switch-over agree with ln C = ln sqrt(pi) + 3e/8 + e^2/8 + O(e^3)
  for (double e : {0.99e-4, 1.01e-4, 1e-3}) {
    const double series = std::sqrt(kPi) * std::exp(0.375 * e + 0.125 * e * e);
    CHECK(c_q(1.0 + e) == doctest::Approx(series).epsilon(e < 1e-3 ? 1e-10 : 1e-8));
  }
  CHECK(qgaussian_normalization(1.0) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-15));
  // q = 0: integral of (1 - x^2) over [-1, 1]
  CHECK(qgaussian_normalization(0.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  CHECK_THROWS_AS(c_q(1.0), std::invalid_argument);
  CHECK_THROWS_AS(c_q(3.0), std::invalid_argument);
}

TEST_CASE("densities integrate to one") {
  for (double q : {1.1, 1.3, 1.5, 1.7, 2.5}) {
    CHECK(std::abs(2 * half_mass(q, 0.8) - 1.0) < 1e-6);
  }
  for (double q : {-1.0, 0.0, 0.5}) {
    const double edge = 1.0 / std::sqrt((1.0 - q) * 0.8);
    const double part = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return qgaussian_density(x, q, 0.8); }, 0.0, edge, 15, 1e-13);
    CHECK(std::abs(2 * part - 1.0) < 1e-6);
    CHECK(qgaussian_density(edge * 1.01, q, 0.8) == 0.0);
  }
}

TEST_CASE("model density matches the two-parameter form with beta = 1/W^2") {
  const QGaussianModel m(1.4, 1.5, 0.7);
  const double w = m.width(3.0);
  CHECK(w == doctest::Approx(std::pow(2.1, 1.0 / 1.5)));
  for (double x : {-3.0, -0.2, 0.0, 1.0, 7.5}) {
    CHECK(qgaussian_pdf(x, m, 3.0) == doctest::Approx(qgaussian_density(x, 1.4, 1 / (w * w))).epsilon(1e-13));
  }
  const double direct = 1.0 / (w * c_q(1.4)) * std::pow(1 + 0.4 * 4.0 / (w * w), -1 / 0.4);
  CHECK(qgaussian_pdf(2.0, m, 3.0) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("CDF agrees with quadrature of the density") {
  for (double q : {1.05, 1.4, 1.8}) {
    const QGaussianModel m(q, 1.2, 2.0);
    for (double x : {-5.0, -1.0, -0.1, 0.0, 0.3, 2.0, 10.0}) {
      CHECK(qgaussian_cdf(x, m, 1.5) == doctest::Approx(cdf_by_quadrature(x, m, 1.5)).epsilon(1e-9));
    }
  }
}

TEST_CASE("self-similarity across times") {
  const QGaussianModel m(1.5, 1.3, 0.9);
  const double t = 2.0, tp = 5.0;
  const double lambda = m.width(tp) / m.width(t);
  for (double x : {-2.0, 0.0, 0.5, 3.0}) {
    CHECK(qgaussian_pdf(x, m, t) == doctest::Approx(lambda * qgaussian_pdf(lambda * x, m, tp)).epsilon(1e-12));
  }
}

TEST_CASE("transformed time") {
  const QGaussianModel m(1.5, 1.3, 0.9);
  const double T = to_transformed_time(2.0, m);
  CHECK(T == doctest::Approx(std::pow(2.0, m.xi())));
  CHECK(to_physical_time(T, m) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m.width_transformed(T) == doctest::Approx(m.width(2.0)).epsilon(1e-13));
}

TEST_CASE("Box-Muller sampler passes a KS test and is deterministic") {
  for (double q : {1.05, 1.4, 1.6}) {
    const QGaussianModel m(q, 1.5, 1.0);
    const auto x = sample_qgaussian(m, 2.0, 20000, 99);
    // 1% critical value 1.63 / sqrt(n)
    CHECK(ks_distance(x, m, 2.0) < 1.63 / std::sqrt(20000.0));
    CHECK(sample_qgaussian(m, 2.0, 20000, 99) == x);
    CHECK(sample_qgaussian(m, 2.0, 20000, 100) != x);
  }
  CHECK_THROWS_AS(sample_qgaussian(QGaussianModel(1.4, 1.5, 1.0), 1.0, 0, 1), std::invalid_argument);
}

TEST_CASE("inverse-CDF sampler agrees with the same distribution") {
  const QGaussianModel m(1.4, 1.5, 1.0);
  const auto x = sample_qgaussian_inverse_cdf(m, 2.0, 20000, 5);
  CHECK(ks_distance(x, m, 2.0) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("draws at q = 1 are standard normal in beta units") {
  std::mt19937_64 rng(3);
  double s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = draw_qgaussian(1.0, 0.5, rng);
    s2 += z * z;
  }
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("infinite-variance q warns but still samples") {
  WarningCapture cap;
  const QGaussianModel m(1.8, 1.5, 1.0);
  const auto x = sample_qgaussian(m, 1.0, 100, 1);
  CHECK(x.size() == 100);
  REQUIRE(cap.messages.size() == 1);
  CHECK(cap.messages[0].find("infinite variance") != std::string::npos);
  cap.messages.clear();
  (void)sample_qgaussian(QGaussianModel(1.5, 1.5, 1.0), 1.0, 100, 1);
  CHECK(cap.messages.empty());
}

TEST_CASE("maximum-likelihood fit recovers q and beta") {
  const QGaussianModel m(1.4, 1.5, 1.0);
  const auto x = sample_qgaussian(m, 2.0, 100000, 42);
  const auto f = fit_qgaussian(x);
  const double w = m.width(2.0);
  CHECK(std::abs(f.q - 1.4) < 0.03);
  CHECK(f.beta == doctest::Approx(1 / (w * w)).epsilon(0.03));
  CHECK(f.q_stderr > 0);
  CHECK(f.q_stderr < 0.02);
  CHECK(std::abs(f.q - 1.4) < 4 * f.q_stderr);
  CHECK(f.samples == 100000);
  CHECK_THROWS_AS(fit_qgaussian(std::vector<double>(999, 1.0)), std::invalid_argument);
}

TEST_CASE("fit is scale-equivariant in beta") {
  const QGaussianModel m(1.3, 1.5, 1.0);
  auto x = sample_qgaussian(m, 1.0, 20000, 8);
  const auto a = fit_qgaussian(x);
  for (auto& v : x) v *= 10.0;
  const auto b = fit_qgaussian(x);
  CHECK(b.q == doctest::Approx(a.q).epsilon(1e-4));
  CHECK(b.beta == doctest::Approx(a.beta / 100.0).epsilon(1e-3));
}

TEST_CASE("scaling law fit on exact data") {
  const double alpha = 1.5, D = 0.7;
  std::vector<double> lags{1, 2, 4, 8, 16}, betas;
  for (double t : lags) betas.push_back(std::pow(D * t, -2 / alpha));
  const auto f = fit_scaling(lags, betas);
  CHECK(f.alpha == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(f.D == doctest::Approx(D).epsilon(1e-12));
  CHECK(f.slope == doctest::Approx(-2 / alpha).epsilon(1e-12));
  CHECK(f.slope_stderr < 1e-10);
  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(fit_scaling(two, two), std::invalid_argument);
}

TEST_CASE("literal diffusion coefficient formula") {
  const double q = 1.5, alpha = 1.4, D = 0.8, T = 2.5;
  const QGaussianModel m(q, alpha, D);
  const Trend trend = Trend::polynomial({1.0, 0.5});
  const double centre = trend.value(T);
  const double expected = std::pow(D, 2 / alpha) * std::pow(c_q(q), q - 1) *
                          std::pow(T, (q - 1) / (3 - q));
  const auto at_centre = fpe_coefficients(m, trend, centre, T, DiffusionConvention::Literal);
  CHECK(at_centre.D2 == doctest::Approx(expected).epsilon(1e-12));
  CHECK(at_centre.D1 == doctest::Approx(0.5));
  const double W = m.width_transformed(T);
  const auto off = fpe_coefficients(m, trend, centre + 1.3, T, DiffusionConvention::Literal);
  CHECK(off.D2 == doctest::Approx(expected * (1 + (q - 1) * 1.69 / (W * W))).epsilon(1e-12));
  // D2 is K * P^(1-q)
  const double K = pde_diffusivity(m, DiffusionConvention::Literal);
  CHECK(K == doctest::Approx(std::pow(D, m.xi())));
  CHECK(off.D2 == doctest::Approx(K * std::pow(qgaussian_pdf_transformed(centre + 1.3, m, trend, T), 1 - q)).epsilon(1e-12));
  const auto sc = fpe_coefficients(m, trend, centre, T);
  CHECK(sc.D2 == doctest::Approx(expected * pde_diffusivity(m) / K).epsilon(1e-12));
}

TEST_CASE("q -> 1 limit of the diffusion coefficients") {
  const QGaussianModel m(1.0 + 1e-9, 1.6, 0.9);
  const auto c = fpe_coefficients(m, Trend::zero(), 0.7, 3.0, DiffusionConvention::Literal);
  CHECK(c.D2 == doctest::Approx(std::pow(0.9, 2 / 1.6)).epsilon(1e-7));
  // heat equation: variance W^2/2 = 2 K T
  CHECK(pde_diffusivity(m) == doctest::Approx(std::pow(0.9, m.xi()) / 4).epsilon(1e-7));
}

TEST_CASE("PDE residual converges at second order for the self-consistent constant") {
  const QGaussianModel m(1.5, 1.5, 1.0);
  const Trend trend = Trend::polynomial({0.1, 0.3});
  std::vector<double> res;
  for (int r = 0; r < 3; ++r) {
    const double h = 0.05 / (1 << r);
    res.push_back(pde_residual(m, trend, {-2.0, h, static_cast<std::size_t>(4 / h) + 1},
                               {1.0, h, static_cast<std::size_t>(1 / h) + 1}));
  }
  const double order = std::log2(res[1] / res[2]);
  CHECK(order == doctest::Approx(2.0).epsilon(0.1));
  CHECK(res[2] < res[1]);
  CHECK(res[1] < res[0]);
}

TEST_CASE("the literal constant does not solve the equation") {
  const QGaussianModel m(1.5, 1.5, 1.0);
  std::vector<double> res;
  for (double h : {0.05, 0.0125}) {
    res.push_back(pde_residual(m, Trend::zero(), {-2.0, h, static_cast<std::size_t>(4 / h) + 1},
                               {1.0, h, static_cast<std::size_t>(1 / h) + 1},
                               DiffusionConvention::Literal));
  }
  CHECK(res[1] > 0.1);
  CHECK(res[1] > 0.5 * res[0]);
}

TEST_CASE("near q = 1 the equation is the heat equation") {
  const QGaussianModel m(1.0 + 1e-8, 1.5, 1.0);
  const double K = pde_diffusivity(m);
  // Gaussian heat kernel with variance 2 K T, written independently
  const DensityField heat = [K](double X, double T) {
    return std::exp(-X * X / (4 * K * T)) / std::sqrt(4 * kPi * K * T);
  };
  const double h = 0.01;
  const double r = pde_residual(heat, m, Trend::zero(), {-2.0, h, 401}, {1.0, h, 101});
  CHECK(r < 1e-4);
}

TEST_CASE("residual grid preconditions") {
  const QGaussianModel m(1.5, 1.5, 1.0);
  CHECK_THROWS_AS(pde_residual(m, Trend::zero(), {-1.0, 0.1, 4}, {1.0, 0.1, 10}), std::invalid_argument);
  CHECK_THROWS_AS(pde_residual(m, Trend::zero(), {-1.0, 0.1, 20}, {0.0, 0.1, 10}), std::invalid_argument);
}
