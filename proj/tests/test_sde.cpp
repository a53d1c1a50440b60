#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stockstat/diagnostics.hpp"
#include "stockstat/qgauss.hpp"
#include "stockstat/sde.hpp"

using namespace stockstat;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

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

}  // namespace

TEST_CASE("zero diffusion follows the trend with first-order error") {
  SimulationSpec s;
  s.drift = Trend::exponential(2.0, 0.5);
  s.constant_D2 = 0.0;
  s.x0 = 1.0;
  s.T0 = 0.5;
  std::vector<double> err;
  for (std::size_t steps : {100u, 200u, 400u}) {
    s.steps = steps;
    s.dt = 2.0 / static_cast<double>(steps);
    const auto e = simulate_qsde(s);
    const double exact = 1.0 + s.drift.value(2.5) - s.drift.value(0.5);
    err.push_back(std::abs(e.paths[0].back() - exact));
  }
  CHECK(err[0] < 0.1);
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("Gaussian noise with constant D2 has variance 2 D2 T") {
  SimulationSpec s;
  s.constant_D2 = 0.5;
  s.noise_q = 1.0;
  s.dt = 0.05;
  s.steps = 20;
  s.paths = 50000;
  s.seed = 3;
  s.threads = 4;
  const auto t = simulate_qsde(s).terminal();
  CHECK(var_of(t) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::abs(mean_of(t)) < 0.02);
}

TEST_CASE("unit-variance q-Gaussian increments give the same variance") {
  SimulationSpec s;
  s.constant_D2 = 0.25;
  s.noise_q = 1.4;
  s.dt = 0.1;
  s.steps = 10;
  s.paths = 50000;
  s.seed = 4;
  s.threads = 4;
  CHECK(var_of(simulate_qsde(s).terminal()) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("single increments are q-Gaussian") {
  SimulationSpec s;
  s.constant_D2 = 0.5;
  s.noise_q = 1.4;
  s.dt = 1.0;
  s.steps = 1;
  s.paths = 20000;
  s.seed = 5;
  const auto t = simulate_qsde(s).terminal();
  // unit variance: beta = 1/(5 - 3q) = 1/0.8, width sqrt(0.8)
  const QGaussianModel m(1.4, 1.0, std::sqrt(0.8));
  CHECK(ks_distance(t, m, 1.0) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("ensembles are reproducible and independent of the thread count") {
  SimulationSpec s;
  s.constant_D2 = 0.3;
  s.noise_q = 1.3;
  s.steps = 50;
  s.paths = 64;
  s.seed = 11;
  s.record_stride = 10;
  const auto a = simulate_qsde(s);
  s.threads = 7;
  const auto b = simulate_qsde(s);
  CHECK(a.paths == b.paths);
  CHECK(a.times.size() == 6);
  CHECK(a.paths[0].size() == 6);
  CHECK(a.times.back() == doctest::Approx(0.5));
  s.seed = 12;
  CHECK(simulate_qsde(s).paths != a.paths);
  s.record_stride = 0;
  CHECK(simulate_qsde(s).paths[0].size() == 2);
}

TEST_CASE("geometric Brownian motion mean and positivity") {
  SimulationSpec s;
  s.kind = SdeKind::Gbm;
  s.x0 = 100.0;
  s.mu = 0.05;
  s.sigma = 0.2;
  s.dt = 0.01;
  s.steps = 100;
  s.paths = 100000;
  s.seed = 12345;
  s.threads = 4;
  s.record_stride = 10;
  const auto e = simulate(s);
  for (const auto& p : e.paths) {
    for (double v : p) REQUIRE(v > 0);
  }
  CHECK(mean_of(e.terminal()) == doctest::Approx(100.0 * std::exp(0.05)).epsilon(0.02));
  // log-variance sigma^2 T
  std::vector<double> logs;
  for (double v : e.terminal()) logs.push_back(std::log(v));
  CHECK(var_of(logs) == doctest::Approx(0.04).epsilon(0.03));
  s.sigma = 0.0;
  CHECK(simulate(s).paths[0].back() == doctest::Approx(100.0 * std::exp(0.05)).epsilon(1e-12));
}

TEST_CASE("model-driven diffusion keeps the q-Gaussian shape") {
  const QGaussianModel m(1.4, 1.5, 1.0);
  SimulationSpec s;
  s.model = m;
  s.T0 = 1.0;
  s.sample_initial = true;
  s.dt = 0.005;
  s.steps = 200;
  s.paths = 20000;
  s.seed = 21;
  s.threads = 4;
  const auto e = simulate_qsde(s);
  const auto f = fit_qgaussian(e.terminal());
  const double w = m.width_transformed(2.0);
  CHECK(std::abs(f.q - 1.4) < 0.03);
  CHECK(f.beta == doctest::Approx(1 / (w * w)).epsilon(0.05));
  CHECK(e.clamped == 0);
}

TEST_CASE("infinite-variance noise is simulated with a warning") {
  std::vector<std::string> seen;
  auto prev = set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  SimulationSpec s;
  s.constant_D2 = 0.1;
  s.noise_q = 2.0;
  s.steps = 5;
  const auto e = simulate_qsde(s);
  set_warning_handler(prev);
  CHECK(e.warnings.size() == 1);
  CHECK(seen.size() == 1);
  for (double v : e.paths[0]) CHECK(std::isfinite(v));
}

TEST_CASE("simulation argument checks") {
  SimulationSpec s;
  CHECK_THROWS_AS(simulate_qsde(s), std::invalid_argument);
  s.constant_D2 = -1;
  CHECK_THROWS_AS(simulate_qsde(s), std::invalid_argument);
  s.constant_D2.reset();
  s.model = QGaussianModel(1.4, 1.5, 1.0);
  CHECK_THROWS_AS(simulate_qsde(s), std::invalid_argument);  // T0 = 0
  s.T0 = 1.0;
  s.dt = 0.0;
  CHECK_THROWS_AS(simulate_qsde(s), std::invalid_argument);
  SimulationSpec g;
  g.kind = SdeKind::Gbm;
  CHECK_THROWS_AS(simulate(g), std::invalid_argument);  // x0 = 0
}

TEST_CASE("synthetic index is trend plus cumulative noise") {
  const Trend trend = Trend::polynomial({100.0, 0.01});
  const QGaussianModel noise(1.4, 1.5, 0.5);
  const auto s = synthetic_index(trend, noise, 2000, 7);
  REQUIRE(s.size() == 2000);
  CHECK(s.label() == "synthetic");
  CHECK(s.prices()[0] == doctest::Approx(100.0));
  const auto draws = sample_qgaussian(noise, 1.0, 2000, 7);
  double walk = 0;
  for (std::size_t i = 1; i < 2000; ++i) {
    walk += draws[i];
    CHECK(s.prices()[i] == doctest::Approx(trend.value(static_cast<double>(i)) + walk).epsilon(1e-12));
    CHECK(s.timestamps()[i] - s.timestamps()[i - 1] == std::chrono::minutes(1));
  }
  CHECK(format_timestamp(s.timestamps()[0]).rfind("2000-01-01", 0) == 0);
  const auto bare = synthetic_index(trend, std::nullopt, 1000, 7);
  CHECK(bare.prices()[999] == doctest::Approx(trend.value(999)));
  CHECK_THROWS_AS(synthetic_index(trend, noise, 999, 7), std::invalid_argument);
}
