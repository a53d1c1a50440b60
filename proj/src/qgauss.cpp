#include "stockstat/qgauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "stockstat/diagnostics.hpp"
#include "stockstat/errors.hpp"
#include "stockstat/numeric.hpp"

namespace stockstat {
namespace {

constexpr double kPi = std::numbers::pi;

void check_time(double t, const char* who) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument(std::string(who) + ": time must be positive");
  }
}

// log of qgaussian_normalization(q)
double log_normalization(double q) {
  if (!(q < 3.0)) throw std::invalid_argument("q-Gaussian normalisation needs q < 3");
  const double e = q - 1.0;
  if (std::abs(e) < 1e-4) {
    // series about q = 1; the gamma-function forms lose digits here
    return 0.5 * std::log(kPi) + 0.375 * e + 0.125 * e * e;
  }
  if (e > 0.0) {
    return 0.5 * std::log(kPi / e) + std::lgamma((3.0 - q) / (2.0 * e)) -
           std::lgamma(1.0 / e);
  }
  const double m = 1.0 / (1.0 - q);
  return 0.5 * std::log(kPi / (1.0 - q)) + std::lgamma(m + 1.0) -
         std::lgamma(m + 1.5);
}

// log of [1 + (q-1) y]^(-1/(q-1)); -inf outside the support
double log_kernel(double q, double y) {
  const double e = q - 1.0;
  if (e == 0.0) return -y;
  const double a = e * y;
  if (a <= -1.0) return -std::numeric_limits<double>::infinity();
  return -std::log1p(a) / e;
}

// q-logarithm, stable near q' = 1
double ln_q(double u, double qp) {
  const double k = 1.0 - qp;
  const double lu = std::log(u);
  if (k == 0.0) return lu;
  return std::expm1(k * lu) / k;
}

void variance_warning(double q) {
  if (q >= 5.0 / 3.0) {
    warn("q >= 5/3: the q-Gaussian has infinite variance; sampling anyway");
  }
}

boost::math::students_t_distribution<double> student_for(double q) {
  return boost::math::students_t_distribution<double>((3.0 - q) / (q - 1.0));
}

}  // namespace

QGaussianModel::QGaussianModel(double q, double alpha, double D)
    : q_(q), alpha_(alpha), D_(D), xi_((3.0 - q) / alpha) {
  if (!(q > 1.0 && q < 3.0)) throw std::invalid_argument("QGaussianModel: need 1 < q < 3");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("QGaussianModel: alpha must be positive");
  }
  if (!(D > 0.0) || !std::isfinite(D)) {
    throw std::invalid_argument("QGaussianModel: D must be positive");
  }
}

double QGaussianModel::width(double t) const {
  check_time(t, "QGaussianModel::width");
  return std::pow(D_ * t, 1.0 / alpha_);
}

double QGaussianModel::width_transformed(double T) const {
  check_time(T, "QGaussianModel::width_transformed");
  return std::pow(std::pow(D_, xi_) * T, 1.0 / (3.0 - q_));
}

double c_q(double q) {
  if (!(q > 1.0 && q < 3.0)) throw std::invalid_argument("c_q: need 1 < q < 3");
  return std::exp(log_normalization(q));
}

double qgaussian_normalization(double q) { return std::exp(log_normalization(q)); }

double qgaussian_density(double x, double q, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("qgaussian_density: beta must be positive");
  return std::exp(0.5 * std::log(beta) - log_normalization(q) +
                  log_kernel(q, beta * x * x));
}

double qgaussian_pdf(double x, const QGaussianModel& model, double t) {
  const double w = model.width(t);
  const double z = x / w;
  return std::exp(log_kernel(model.q(), z * z) - log_normalization(model.q())) / w;
}

double qgaussian_cdf(double x, const QGaussianModel& model, double t) {
  const double q = model.q();
  const double w = model.width(t);
  // p(x) ∝ [1 + (q-1) x^2 / w^2]^(-1/(q-1)) is Student-t with
  // nu = (3-q)/(q-1) after x -> x sqrt(3-q) / w
  const double s = x * std::sqrt(3.0 - q) / w;
  if (std::isinf(s)) return s > 0 ? 1.0 : 0.0;
  return boost::math::cdf(student_for(q), s);
}

double open_unit_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double draw_qgaussian(double q, double beta, std::mt19937_64& rng) {
  if (!(q < 3.0)) throw std::invalid_argument("draw_qgaussian: need q < 3");
  if (!(beta > 0.0)) throw std::invalid_argument("draw_qgaussian: beta must be positive");
  const double u1 = open_unit_uniform(rng);
  const double u2 = open_unit_uniform(rng);
  // Box-Muller with q' = (1+q)/(3-q) gives the standard form with
  // beta0 = 1/(3-q). Only one of the pair is used: the two are
  // uncorrelated but not independent unless q = 1.
  const double qp = (1.0 + q) / (3.0 - q);
  const double z = std::sqrt(-2.0 * ln_q(u1, qp)) * std::cos(2.0 * kPi * u2);
  return z / std::sqrt((3.0 - q) * beta);
}

std::vector<double> sample_qgaussian(const QGaussianModel& model, double t,
                                     std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("sample_qgaussian: n must be positive");
  variance_warning(model.q());
  const double w = model.width(t);
  const double beta = 1.0 / (w * w);
  std::vector<double> out(n);
  for (auto& v : out) v = draw_qgaussian(model.q(), beta, rng);
  return out;
}

std::vector<double> sample_qgaussian(const QGaussianModel& model, double t,
                                     std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_qgaussian(model, t, n, rng);
}

std::vector<double> sample_qgaussian_inverse_cdf(const QGaussianModel& model,
                                                 double t, std::size_t n,
                                                 std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_qgaussian_inverse_cdf: n must be positive");
  variance_warning(model.q());
  const double q = model.q();
  const double scale = model.width(t) / std::sqrt(3.0 - q);
  const auto dist = student_for(q);
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = boost::math::quantile(dist, open_unit_uniform(rng)) * scale;
  return out;
}

// ---- maximum likelihood ----------------------------------------------------

namespace {

constexpr double kQLow = 0.5;
constexpr double kQHigh = 2.95;

struct Likelihood {
  std::vector<double> x2;
  double x2max = 0.0;

  // mean log-likelihood
  double mean_ll(double q, double beta) const {
    if (!(beta > 0.0)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double v : x2) s += log_kernel(q, beta * v);
    return 0.5 * std::log(beta) - log_normalization(q) +
           s / static_cast<double>(x2.size());
  }

  // d mean_ll / d log beta; strictly decreasing in beta
  double score_log_beta(double q, double beta) const {
    const double e = q - 1.0;
    double s = 0.0;
    for (double v : x2) {
      const double y = beta * v;
      s += y / (1.0 + e * y);
    }
    return 0.5 - s / static_cast<double>(x2.size());
  }

  // upper limit on beta imposed by the compact support when q < 1
  double beta_cap(double q) const {
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
    return 1.0 / ((1.0 - q) * x2max);
  }

  double best_beta(double q, double start) const {
    const double cap = beta_cap(q);
    double lo = std::min(start, 0.5 * cap);
    double hi = lo;
    for (int i = 0; i < 200 && score_log_beta(q, lo) <= 0.0; ++i) lo *= 0.25;
    if (std::isfinite(cap)) {
      hi = cap * (1.0 - 1e-12);
    } else {
      for (int i = 0; i < 200 && score_log_beta(q, hi) >= 0.0; ++i) hi *= 4.0;
    }
    const double slo = score_log_beta(q, lo), shi = score_log_beta(q, hi);
    if (!(slo > 0.0) || !(shi < 0.0)) {
      throw ConvergenceError("fit_qgaussian: could not bracket beta at q = " +
                             std::to_string(q));
    }
    std::uintmax_t iters = 200;
    auto f = [&](double lb) { return score_log_beta(q, std::exp(lb)); };
    auto r = boost::math::tools::toms748_solve(
        f, std::log(lo), std::log(hi), slo, shi,
        boost::math::tools::eps_tolerance<double>(45), iters);
    return std::exp(0.5 * (r.first + r.second));
  }
};

}  // namespace

QGaussianFit fit_qgaussian(std::span<const double> samples) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("fit_qgaussian: need at least 1000 samples");
  }
  Likelihood lk;
  lk.x2.reserve(samples.size());
  for (double v : samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_qgaussian: non-finite sample");
    lk.x2.push_back(v * v);
    lk.x2max = std::max(lk.x2max, v * v);
  }
  if (!(lk.x2max > 0.0)) throw std::invalid_argument("fit_qgaussian: all samples are zero");

  // robust starting scale: median of x^2 ~ 0.455 sigma^2 for a Gaussian
  std::vector<double> tmp = lk.x2;
  auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  double beta0 = *mid > 0.0 ? 0.2275 / *mid : 1.0 / lk.x2max;

  auto profile = [&](double q) {
    const double b = lk.best_beta(q, beta0);
    return -lk.mean_ll(q, b);
  };
  std::uintmax_t iters = 300;
  const auto [q_hat, nll] =
      boost::math::tools::brent_find_minima(profile, kQLow, kQHigh, 40, iters);
  if (iters >= 300) {
    throw ConvergenceError("fit_qgaussian: iteration budget exhausted at q = " +
                           std::to_string(q_hat));
  }
  if (q_hat - kQLow < 1e-4 || kQHigh - q_hat < 1e-4) {
    throw ConvergenceError("fit_qgaussian: optimum on the search bound, q = " +
                           std::to_string(q_hat));
  }
  const double b_hat = lk.best_beta(q_hat, beta0);

  QGaussianFit fit;
  fit.q = q_hat;
  fit.beta = b_hat;
  fit.goodness = -nll;
  fit.samples = samples.size();

  // observed information from central differences of the total
  // log-likelihood, in (q, log beta)
  const double n = static_cast<double>(samples.size());
  auto L = [&](double q, double lb) { return n * lk.mean_ll(q, std::exp(lb)); };
  const double hq = 1e-3, hb = 1e-3, lb = std::log(b_hat);
  const double f0 = L(q_hat, lb);
  const double fqq = (L(q_hat + hq, lb) - 2 * f0 + L(q_hat - hq, lb)) / (hq * hq);
  const double fbb = (L(q_hat, lb + hb) - 2 * f0 + L(q_hat, lb - hb)) / (hb * hb);
  const double fqb = (L(q_hat + hq, lb + hb) - L(q_hat + hq, lb - hb) -
                      L(q_hat - hq, lb + hb) + L(q_hat - hq, lb - hb)) /
                     (4 * hq * hb);
  // covariance = inverse of the negative Hessian
  const double a = -fqq, b = -fqb, d = -fbb;
  const double det = a * d - b * b;
  if (a > 0.0 && det > 0.0 && std::isfinite(det)) {
    fit.q_stderr = std::sqrt(d / det);
    fit.beta_stderr = b_hat * std::sqrt(a / det);  // delta method from log beta
  } else {
    fit.q_stderr = fit.beta_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

ScalingLawFit fit_scaling(std::span<const double> lags,
                          std::span<const double> betas) {
  if (lags.size() != betas.size() || lags.size() < 3) {
    throw std::invalid_argument("fit_scaling: need >= 3 matching (lag, beta) pairs");
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!(lags[i] > 0.0) || !(betas[i] > 0.0)) {
      throw std::invalid_argument("fit_scaling: lags and betas must be positive");
    }
    lx.push_back(std::log(lags[i]));
    ly.push_back(std::log(betas[i]));
  }
  const LinearFit lf = fit_line(lx, ly);
  if (!(lf.slope < 0.0)) {
    throw std::invalid_argument("fit_scaling: beta does not decrease with lag");
  }
  ScalingLawFit out;
  out.slope = lf.slope;
  out.slope_stderr = lf.slope_stderr;
  out.alpha = -2.0 / lf.slope;
  // intercept = -(2/alpha) log D = slope * log D
  out.D = std::exp(lf.intercept / lf.slope);
  out.alpha_stderr = 2.0 * lf.slope_stderr / (lf.slope * lf.slope);
  return out;
}

// ---- Fokker-Planck side ----------------------------------------------------

double pde_diffusivity(const QGaussianModel& m, DiffusionConvention convention) {
  const double q = m.q();
  const double base = std::pow(m.D(), m.xi());
  if (convention == DiffusionConvention::Literal) return base;
  return base * std::pow(c_q(q), 1.0 - q) / (2.0 * (2.0 - q) * (3.0 - q));
}

double qgaussian_pdf_transformed(double X, const QGaussianModel& m,
                                 const Trend& trend, double T) {
  const double w = m.width_transformed(T);
  const double z = (X - trend.value(T)) / w;
  return std::exp(log_kernel(m.q(), z * z) - log_normalization(m.q())) / w;
}

FPECoefficients fpe_coefficients(const QGaussianModel& m, const Trend& trend,
                                 double X, double T,
                                 DiffusionConvention convention) {
  check_time(T, "fpe_coefficients");
  FPECoefficients c;
  c.D1 = trend.derivative(T);
  // K P^(1-q) written out so that far tails do not underflow P
  const double q = m.q();
  const double w = m.width_transformed(T);
  const double z = (X - trend.value(T)) / w;
  c.D2 = pde_diffusivity(m, convention) * std::pow(w * c_q(q), q - 1.0) *
         (1.0 - (1.0 - q) * z * z);
  return c;
}

double pde_residual(const DensityField& density, const QGaussianModel& m,
                    const Trend& trend, const UniformGrid& xg,
                    const UniformGrid& tg, DiffusionConvention convention) {
  if (xg.points < 5 || tg.points < 5) {
    throw std::invalid_argument("pde_residual: grids need at least 5 points per axis");
  }
  if (!(xg.step > 0.0) || !(tg.step > 0.0)) {
    throw std::invalid_argument("pde_residual: grid steps must be positive");
  }
  if (!(tg.start > 0.0)) throw std::invalid_argument("pde_residual: T grid must be > 0");
  if (!density) throw std::invalid_argument("pde_residual: empty density");

  const double q = m.q();
  const double K = pde_diffusivity(m, convention);
  const std::size_t nx = xg.points, nt = tg.points;
  std::vector<double> P(nx * nt), U(nx * nt);
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double p = density(xg.at(i), tg.at(j));
      P[j * nx + i] = p;
      U[j * nx + i] = std::pow(p, 2.0 - q);
    }
  }
  const double dx = xg.step, dt = tg.step;
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < nt; ++j) {
    const double drift = trend.derivative(tg.at(j));
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      const std::size_t k = j * nx + i;
      const double dPdT = (P[k + nx] - P[k - nx]) / (2.0 * dt);
      const double dPdX = (P[k + 1] - P[k - 1]) / (2.0 * dx);
      const double d2U = (U[k + 1] - 2.0 * U[k] + U[k - 1]) / (dx * dx);
      worst = std::max(worst, std::abs(dPdT - K * d2U + drift * dPdX));
    }
  }
  return worst;
}

double pde_residual(const QGaussianModel& m, const Trend& trend,
                    const UniformGrid& xg, const UniformGrid& tg,
                    DiffusionConvention convention) {
  return pde_residual(
      [&](double X, double T) { return qgaussian_pdf_transformed(X, m, trend, T); },
      m, trend, xg, tg, convention);
}

double to_transformed_time(double t, const QGaussianModel& m) {
  if (!(t >= 0.0)) throw std::invalid_argument("to_transformed_time: t must be >= 0");
  return std::pow(t, m.xi());
}

double to_physical_time(double T, const QGaussianModel& m) {
  if (!(T >= 0.0)) throw std::invalid_argument("to_physical_time: T must be >= 0");
  return std::pow(T, 1.0 / m.xi());
}

}  // namespace stockstat
