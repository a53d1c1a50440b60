// One line per acceptance criterion: PASS, FAIL or SKIP, then the numbers.
// Exit status is 1 when any criterion fails.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "stockstat/detrend.hpp"
#include "stockstat/fractal.hpp"
#include "stockstat/pipeline.hpp"
#include "stockstat/qgauss.hpp"
#include "stockstat/sde.hpp"
#include "stockstat/spectral.hpp"

using namespace stockstat;

namespace {

constexpr std::uint64_t kSeed = 12345;
constexpr double kPi = std::numbers::pi;
int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0,
                double e = 0, double g = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
  return buf;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

std::vector<double> cumsum(const std::vector<double>& x) {
  std::vector<double> c(x.size());
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = (s += x[i]);
  return c;
}

double exponent_at(const std::vector<Exponent>& e, double w) {
  for (const auto& x : e) {
    if (x.order == w) return x.value;
  }
  return NAN;
}

// 1: periodogram against the FT of the circular autocovariance
void wiener_khinchin_identity() {
  double worst = 0;
  for (int p = 10; p <= 14; ++p) {
    const auto x = gaussian(std::size_t{1} << p, kSeed + static_cast<std::uint64_t>(p));
    const auto a = power_spectrum(x);
    const auto b = acf_spectrum(circular_autocovariance(x));
    double num = 0, den = 0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      num += (a.values[k] - b.values[k]) * (a.values[k] - b.values[k]);
      den += a.values[k] * a.values[k];
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  report(1, "wiener-khinchin-identity", worst < 1e-10,
         fmt("max relative L2 error %.3e over N = 2^10..2^14 (limit 1e-10)", worst));
}

// 2: DFA of a random walk
bool dfa_checks(const ScalingFit& f, double* h2, double* dev, double* a1, double* se) {
  *h2 = exponent_at(f.h, 2.0);
  *dev = f.verdict.max_deviation;
  *a1 = f.verdict.h_fit.a1;
  *se = f.verdict.h_fit.a1_jackknife_stderr;
  return std::abs(*h2 - 0.5) <= 0.05 && f.verdict.monofractal && f.verdict.stationary;
}

void dfa_sanity() {
  const std::size_t n = std::size_t{1} << 17;
  const auto fit = analyze_multifractal(cumsum(gaussian(n, kSeed)));
  double h2, dev, a1, se;
  const bool ok = dfa_checks(fit, &h2, &dev, &a1, &se);
  double neg = 0;
  for (std::size_t i = 0; i < fit.verdict.orders.size(); ++i) {
    if (fit.verdict.orders[i] < 0) neg = std::max(neg, fit.verdict.deviations[i]);
  }
  report(2, "dfa-random-walk", ok,
         fmt("h(2) = %.4f (0.50 +- 0.05); h(w) slope a1 = %.4f, 2 jackknife stderr = %.4f; "
             "max |tau - (w h - 1)| over w > 0 = %.4f (<= 0.1); over w < 0 = %.3f, not gated",
             h2, a1, 2 * se, dev, neg));
  // other seeds, for information only
  int passed = 0;
  const int seeds = 10;
  for (int s = 1; s <= seeds; ++s) {
    double a, b, c, d;
    if (dfa_checks(analyze_multifractal(cumsum(gaussian(n, kSeed + static_cast<std::uint64_t>(s)))),
                   &a, &b, &c, &d)) {
      ++passed;
    }
  }
  std::printf("INFO 2 dfa-random-walk: %d of %d further seeds pass all three checks\n", passed, seeds);
}

// 3: a linear trend of 5 noise standard deviations over the series
void trend_discrimination() {
  const std::size_t n = std::size_t{1} << 17;
  const auto noise = gaussian(n, kSeed);
  std::vector<double> trended(n);
  for (std::size_t t = 0; t < n; ++t) {
    trended[t] = noise[t] + 5.0 * static_cast<double>(t) / static_cast<double>(n);
  }
  // trend removed by a least-squares line
  std::vector<double> removed(n);
  {
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double u = static_cast<double>(t);
      st += u, sy += trended[t], stt += u * u, sty += u * trended[t];
    }
    const double m = static_cast<double>(n);
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    const double icpt = (sy - slope * st) / m;
    for (std::size_t t = 0; t < n; ++t) removed[t] = trended[t] - icpt - slope * static_cast<double>(t);
  }
  const auto t1_trend = analyze_multifractal(cumsum(trended)).verdict;
  const auto t1_clean = analyze_multifractal(cumsum(removed)).verdict;
  const auto t2_trend = wiener_khinchin_test(trended);
  const auto t2_clean = wiener_khinchin_test(removed);
  const bool ok = !t1_trend.stationary && !t2_trend.stationary && t1_clean.stationary &&
                  t2_clean.stationary;
  report(3, "trend-discrimination", ok,
         fmt("with trend: test 1 max dev %.4f (needs > 0.1), test 2 median %.4f (needs > 0.15); "
             "trend removed: test 1 %.4f (<= 0.1), test 2 %.4f (<= 0.15)",
             t1_trend.max_deviation, t2_trend.median_deviation, t1_clean.max_deviation,
             t2_clean.median_deviation));
}

// 4: normalisation, integrals and the fit round trip
void qgaussian_math() {
  const double e2 = std::abs(c_q(2.0) - kPi);
  const double e1 = std::abs(c_q(1.001) - std::sqrt(kPi));
  double worst_mass = 0;
  for (double q : {1.1, 1.3, 1.5, 1.7}) {
    const QGaussianModel m(q, 1.5, 1.0);
    // the CDF at +-inf is exact; integrate the density numerically instead,
    // by the substitution x = tan(u) and a composite Simpson rule
    const int k = 200000;
    const double h = kPi / k;
    double s = 0;
    for (int i = 0; i <= k; ++i) {
      const double u = -kPi / 2 + i * h;
      double f = 0;
      if (i != 0 && i != k) {
        const double c = std::cos(u);
        f = qgaussian_pdf(std::tan(u), m, 1.0) / (c * c);
      }
      s += f * (i == 0 || i == k ? 1 : (i % 2 ? 4 : 2));
    }
    worst_mass = std::max(worst_mass, std::abs(s * h / 3 - 1.0));
  }
  const QGaussianModel m(1.4, 1.5, 1.0);
  const auto fit = fit_qgaussian(sample_qgaussian(m, 1.0, 100000, kSeed));
  const bool ok = e2 < 1e-12 && e1 < 1e-2 && worst_mass < 1e-6 && std::abs(fit.q - 1.4) <= 0.03;
  report(4, "q-gaussian-math", ok,
         fmt("|c_q(2) - pi| = %.2e; |c_q(1.001) - sqrt(pi)| = %.2e; max |mass - 1| = %.2e; "
             "fit q = %.4f +- %.4f for q = 1.4, n = 1e5",
             e2, e1, worst_mass, fit.q, fit.q_stderr));
}

// 5: convergence order of the PDE residual and the q -> 1 limit
void pde_order() {
  const QGaussianModel m(1.5, 1.5, 1.0);
  const Trend trend = Trend::polynomial({0.1, 0.3});
  std::vector<double> r;
  for (int k = 0; k < 4; ++k) {
    const double h = 0.05 / (1 << k);
    r.push_back(pde_residual(m, trend, {-2.0, h, static_cast<std::size_t>(4 / h) + 1},
                             {1.0, h, static_cast<std::size_t>(1 / h) + 1}));
  }
  const double order = std::log2(r[2] / r[3]);

  const QGaussianModel near1(1.0 + 1e-8, 1.5, 1.0);
  const double K = pde_diffusivity(near1);
  const DensityField heat = [K](double X, double T) {
    return std::exp(-X * X / (4 * K * T)) / std::sqrt(4 * kPi * K * T);
  };
  std::vector<double> rh;
  double gap = 0;
  for (double h : {0.02, 0.01}) {
    rh.push_back(pde_residual(heat, near1, Trend::zero(), {-2.0, h, static_cast<std::size_t>(4 / h) + 1},
                              {1.0, h, static_cast<std::size_t>(1 / h) + 1}));
  }
  for (double x = -2; x <= 2; x += 0.25) {
    gap = std::max(gap, std::abs(qgaussian_pdf_transformed(x, near1, Trend::zero(), 1.5) - heat(x, 1.5)));
  }
  const double heat_order = std::log2(rh[0] / rh[1]);
  const bool ok = std::abs(order - 2.0) <= 0.2 && std::abs(heat_order - 2.0) <= 0.2 && gap < 1e-6;
  report(5, "pde-residual-order", ok,
         fmt("observed order %.3f (residuals %.3e -> %.3e); q -> 1: heat-kernel residual order %.3f, "
             "max |P_q - heat kernel| = %.2e",
             order, r[2], r[3], heat_order, gap));
}

// 6: SDE ensemble statistics
void sde_statistics() {
  SimulationSpec s;
  s.constant_D2 = 0.5;
  s.noise_q = 1.0;
  s.dt = 0.02;
  s.steps = 50;
  s.paths = 100000;
  s.seed = kSeed;
  s.threads = 4;
  const auto x = simulate_qsde(s).terminal();
  double m = 0, v = 0;
  for (double e : x) m += e;
  m /= static_cast<double>(x.size());
  for (double e : x) v += (e - m) * (e - m);
  v /= static_cast<double>(x.size() - 1);
  const double target_v = 2 * 0.5 * 1.0;

  SimulationSpec g;
  g.kind = SdeKind::Gbm;
  g.x0 = 100;
  g.mu = 0.05;
  g.sigma = 0.2;
  g.dt = 0.01;
  g.steps = 100;
  g.paths = 100000;
  g.seed = kSeed;
  g.threads = 4;
  const auto y = simulate(g).terminal();
  double gm = 0;
  for (double e : y) gm += e;
  gm /= static_cast<double>(y.size());
  const double target_m = 100 * std::exp(0.05);
  const bool ok = std::abs(v / target_v - 1) <= 0.02 && std::abs(gm / target_m - 1) <= 0.02;
  report(6, "sde-statistics", ok,
         fmt("Var(X_T) = %.4f vs 2 D2 T = %.4f; GBM mean %.4f vs %.4f (1e5 paths)", v, target_v,
             gm, target_m));
}

// 7: kurtosis window criterion
void kurtosis_criterion() {
  const std::size_t n = std::size_t{1} << 17;
  const std::vector<std::size_t> windows{500, 1000, 2000, 5000, 10000};
  const auto g = gaussian(n, kSeed);
  bool gauss_ok = true;
  double worst = 0;
  for (auto w : windows) {
    const auto k = mean_kurtosis_over_windows(g, w);
    const double z = std::abs(k.mean - 3.0) / k.std_error;
    worst = std::max(worst, z);
    gauss_ok = gauss_ok && z <= 3.0;
  }
  std::mt19937_64 rng(kSeed);
  std::student_t_distribution<double> t3(3.0);
  std::vector<double> t(n);
  for (auto& v : t) v = t3(rng);
  const auto scan = scan_optimal_window(t, windows);
  double lowest = INFINITY;
  for (double k : scan.mean_kurtosis) lowest = std::min(lowest, k);
  const bool ok = gauss_ok && lowest > 3.0 && !scan.qualified;
  report(7, "kurtosis-window", ok,
         fmt("Gaussian: max |K - 3| / stderr = %.2f (<= 3) over windows 500..10000; "
             "Student-t(3): min K = %.2f, qualifying window ",
             worst, lowest) + (scan.qualified ? "found" : "none"));
}

// 8: Savitzky-Golay weights
void savitzky_golay_oracle() {
  const auto c = savitzky_golay_coefficients(5, 2, 2);
  const double ref[] = {-3, 12, 17, 12, -3};
  double werr = 0;
  for (int i = 0; i < 5; ++i) werr = std::max(werr, std::abs(c[i] - ref[i] / 35));
  std::vector<double> y(500);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double u = static_cast<double>(i) / 100.0;
    y[i] = 2.0 - u + 0.3 * u * u;
  }
  double perr = 0;
  const auto s = savitzky_golay(y, 31, 2);
  for (std::size_t i = 0; i < y.size(); ++i) perr = std::max(perr, std::abs(s[i] - y[i]));
  report(8, "savitzky-golay", werr < 1e-12 && perr < 1e-10,
         fmt("max weight error %.2e (<= 1e-12); quadratic reproduced to %.2e (<= 1e-10)", werr,
             perr));
}

// 9: user-supplied index data
void reproduction() {
  const char* path = std::getenv("SP500_CSV");
  if (path == nullptr || *path == '\0') {
    std::printf("SKIP 9 index-reproduction: set SP500_CSV to a minute-level price CSV "
                "(timestamp,price)\n");
    return;
  }
  PipelineConfig cfg;
  cfg.input = path;
  if (const char* col = std::getenv("SP500_PRICE_COLUMN")) cfg.schema.price_column = col;
  if (const char* col = std::getenv("SP500_TIMESTAMP_COLUMN")) cfg.schema.timestamp_column = col;
  cfg.acf_max_lag = 5000;
  try {
    const auto series = load_csv(cfg.input, cfg.schema);
    const auto r = run_analysis(series, cfg).report;
    const double months = r.window_scan ? r.window_scan->optimal_months : NAN;
    const double a1 = r.test1 ? r.test1->h_fit.a1 : NAN;
    const double b1 = r.test1 ? r.test1->h_fit.b1 : NAN;
    const double c2 = r.test1 ? r.test1->tau_fit.c2 : NAN;
    const double spec = r.index_spectrum ? r.index_spectrum->exponent : NAN;
    const double gamma = r.acf && r.acf->gamma ? r.acf->gamma->exponent : NAN;
    const bool ok = std::abs(months - 13) <= 1 && std::abs(a1 + 0.0232) <= 0.006 &&
                    std::abs(b1 - 0.5219) <= 0.012 && std::abs(c2 + 1.0) <= 0.02 &&
                    std::abs(spec + 2.0) <= 0.1 && std::abs(gamma + 1.02) <= 0.52;
    report(9, "index-reproduction", ok,
           fmt("window %.2f months (13 +- 1); a1 = %.4f (-0.0232 +- 0.006); b1 = %.4f "
               "(0.5219 +- 0.012); c2 = %.4f (-1.00 +- 0.02); spectrum exponent %.3f "
               "(-2.0 +- 0.1); gamma = %.3f (-1.02 +- 0.52)",
               months, a1, b1, c2, spec, gamma));
  } catch (const std::exception& e) {
    report(9, "index-reproduction", false, std::string("run failed: ") + e.what());
  }
}

}  // namespace

int main() {
  wiener_khinchin_identity();
  dfa_sanity();
  trend_discrimination();
  qgaussian_math();
  pde_order();
  sde_statistics();
  kurtosis_criterion();
  savitzky_golay_oracle();
  reproduction();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
