#include "stockstat/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "stockstat/numeric.hpp"

namespace stockstat {
namespace {

void check_scale(std::size_t n, std::size_t s, std::size_t min_s, const char* who) {
  if (s < min_s) {
    throw std::invalid_argument(std::string(who) + ": scale too small");
  }
  if (s > n) throw std::invalid_argument(std::string(who) + ": scale exceeds series length");
}

void check_order(double w, const char* who) {
  if (w == 0.0 || !std::isfinite(w)) {
    throw std::invalid_argument(std::string(who) + ": order must be finite and non-zero");
  }
}

// the segment of index v (0-based) belongs to block v * K / Ns
std::size_t block_of(std::size_t v, std::size_t ns, std::size_t k) { return v * k / ns; }

std::vector<Exponent> fit_exponents(const FluctuationSpectrum& sp, ScaleRange range,
                                    double r2_min, bool moments) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < sp.scales.size(); ++j) {
    const double s = static_cast<double>(sp.scales[j]);
    if (s >= range.lo * (1 - 1e-12) && s <= range.hi * (1 + 1e-12)) idx.push_back(j);
  }
  if (idx.size() < 4) {
    throw std::invalid_argument("fewer than 4 scales inside the fit range");
  }
  std::vector<double> lx;
  for (auto j : idx) lx.push_back(std::log(static_cast<double>(sp.scales[j])));

  std::vector<Exponent> out;
  std::vector<double> ly(idx.size());
  for (std::size_t o = 0; o < sp.orders.size(); ++o) {
    const double w = sp.orders[o];
    const auto& row = moments ? sp.G[o] : sp.F[o];
    for (std::size_t i = 0; i < idx.size(); ++i) ly[i] = std::log(row[idx[i]]);
    const LinearFit lf = fit_line(lx, ly);
    Exponent e;
    e.order = w;
    e.value = lf.slope;
    e.std_error = lf.slope_stderr;
    e.r_squared = lf.r_squared;
    e.linear = lf.r_squared >= r2_min;
    e.points = idx.size();

    const std::size_t K = sp.blocks;
    if (K >= 2) {
      for (std::size_t b = 0; b < K; ++b) {
        bool ok = true;
        for (std::size_t i = 0; i < idx.size(); ++i) {
          const std::size_t j = idx[i];
          double tot = 0.0, cnt = 0.0;
          for (std::size_t c = 0; c < K; ++c) {
            if (c == b) continue;
            tot += moments ? sp.g_block_sum[o][j][c] : sp.f_block_sum[o][j][c];
            cnt += sp.f_block_count[o][j][c];
          }
          if (!(tot > 0.0) || !(cnt > 0.0)) {
            ok = false;
            break;
          }
          ly[i] = moments ? std::log(tot) : std::log(tot / cnt) / w;
        }
        e.replicates.push_back(ok ? fit_line(lx, ly).slope
                                  : std::numeric_limits<double>::quiet_NaN());
      }
      double m = 0.0;
      for (double r : e.replicates) m += r;
      m /= static_cast<double>(K);
      double ss = 0.0;
      for (double r : e.replicates) ss += (r - m) * (r - m);
      e.jackknife_stderr = std::sqrt(ss * static_cast<double>(K - 1) / static_cast<double>(K));
    } else {
      e.jackknife_stderr = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(e));
  }
  return out;
}

double jackknife_se(const std::vector<double>& reps) {
  const auto K = static_cast<double>(reps.size());
  if (reps.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = 0.0;
  for (double r : reps) m += r;
  m /= K;
  double ss = 0.0;
  for (double r : reps) ss += (r - m) * (r - m);
  return std::sqrt(ss * (K - 1) / K);
}

}  // namespace

std::vector<double> segment_variances(std::span<const double> profile, std::size_t s) {
  check_scale(profile.size(), s, 2, "segment_variances");
  const std::size_t ns = profile.size() / s;
  std::vector<double> out(ns);
  for (std::size_t v = 0; v < ns; ++v) {
    auto seg = profile.subspan(v * s, s);
    out[v] = variance(seg);
  }
  return out;
}

double fluctuation_function(std::span<const double> profile, std::size_t s, double w) {
  check_order(w, "fluctuation_function");
  const auto f2 = segment_variances(profile, s);
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : f2) {
    if (v > 0.0) {
      sum += std::pow(v, w / 2.0);
      ++n;
    } else if (w > 0.0) {
      ++n;
    }
  }
  if (n == 0 || !(sum > 0.0)) {
    throw std::invalid_argument("fluctuation_function: all segments have zero variance");
  }
  return std::pow(sum / static_cast<double>(n), 1.0 / w);
}

double fluctuation_function_log(std::span<const double> profile, std::size_t s) {
  const auto f2 = segment_variances(profile, s);
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : f2) {
    if (v > 0.0) {
      sum += std::log(v);
      ++n;
    }
  }
  if (n == 0) {
    throw std::invalid_argument("fluctuation_function_log: all segments have zero variance");
  }
  return std::exp(0.5 * sum / static_cast<double>(n));
}

std::vector<double> box_probabilities(std::span<const double> profile, std::size_t s) {
  check_scale(profile.size(), s, 1, "box_probabilities");
  if (profile.size() < 2) {
    throw std::invalid_argument("box_probabilities: need at least 2 samples");
  }
  const std::size_t nb = (profile.size() - 1) / s;
  if (nb == 0) throw std::invalid_argument("box_probabilities: scale leaves no complete box");
  std::vector<double> out(nb);
  for (std::size_t v = 0; v < nb; ++v) out[v] = profile[(v + 1) * s] - profile[v * s];
  return out;
}

MomentSum generalized_moments(std::span<const double> profile, std::size_t s, double w) {
  const auto p = box_probabilities(profile, s);
  MomentSum m;
  for (double v : p) {
    const double a = std::abs(v);
    if (a == 0.0 && w < 0.0) {
      ++m.zeros_excluded;
      continue;
    }
    m.value += w == 0.0 ? 1.0 : std::pow(a, w);
    ++m.boxes;
  }
  if (w < 0.0 && m.boxes == 0) {
    throw std::invalid_argument("generalized_moments: all boxes are zero for a negative order");
  }
  return m;
}

FluctuationSpectrum fluctuation_spectrum(std::span<const double> profile,
                                         std::vector<std::size_t> scales,
                                         std::vector<double> orders,
                                         std::size_t blocks) {
  if (scales.empty() || orders.empty()) {
    throw std::invalid_argument("fluctuation_spectrum: empty scale or order grid");
  }
  for (std::size_t j = 0; j < scales.size(); ++j) {
    check_scale(profile.size(), scales[j], 2, "fluctuation_spectrum");
    if (scales[j] >= profile.size()) {
      throw std::invalid_argument("fluctuation_spectrum: scale must be below series length");
    }
    if (j > 0 && scales[j] <= scales[j - 1]) {
      throw std::invalid_argument("fluctuation_spectrum: scales must be strictly increasing");
    }
  }
  for (double w : orders) check_order(w, "fluctuation_spectrum");

  FluctuationSpectrum sp;
  sp.scales = std::move(scales);
  sp.orders = std::move(orders);
  sp.blocks = blocks;
  const std::size_t no = sp.orders.size(), nsc = sp.scales.size();
  const std::size_t K = std::max<std::size_t>(blocks, 1);
  sp.F.assign(no, std::vector<double>(nsc));
  sp.G.assign(no, std::vector<double>(nsc));
  sp.zeros_excluded.assign(no, std::vector<std::size_t>(nsc, 0));
  auto cube = [&] {
    return std::vector<std::vector<std::vector<double>>>(
        no, std::vector<std::vector<double>>(nsc, std::vector<double>(K, 0.0)));
  };
  sp.f_block_sum = cube();
  sp.g_block_sum = cube();
  sp.f_block_count = cube();

  for (std::size_t j = 0; j < nsc; ++j) {
    const std::size_t s = sp.scales[j];
    const auto f2 = segment_variances(profile, s);
    const auto p = box_probabilities(profile, s);
    for (std::size_t o = 0; o < no; ++o) {
      const double w = sp.orders[o];
      auto& fs = sp.f_block_sum[o][j];
      auto& fc = sp.f_block_count[o][j];
      auto& gs = sp.g_block_sum[o][j];
      double ftot = 0.0, fcnt = 0.0, gtot = 0.0;
      for (std::size_t v = 0; v < f2.size(); ++v) {
        if (!(f2[v] > 0.0) && w < 0.0) continue;
        const double term = f2[v] > 0.0 ? std::pow(f2[v], w / 2.0) : 0.0;
        const std::size_t b = block_of(v, f2.size(), K);
        fs[b] += term;
        fc[b] += 1.0;
        ftot += term;
        fcnt += 1.0;
      }
      for (std::size_t v = 0; v < p.size(); ++v) {
        const double a = std::abs(p[v]);
        if (a == 0.0 && w < 0.0) {
          ++sp.zeros_excluded[o][j];
          continue;
        }
        const double term = std::pow(a, w);
        gs[block_of(v, p.size(), K)] += term;
        gtot += term;
      }
      if (!(ftot > 0.0) || !(gtot > 0.0)) {
        throw std::invalid_argument("fluctuation_spectrum: undefined moment at order " +
                                    std::to_string(w) + ", scale " + std::to_string(s));
      }
      sp.F[o][j] = std::pow(ftot / fcnt, 1.0 / w);
      sp.G[o][j] = gtot;
    }
  }
  return sp;
}

std::vector<std::size_t> default_scales(std::size_t n) {
  if (n < 200) throw std::invalid_argument("default_scales: series shorter than 200 samples");
  return log_spaced_sizes(10, n / 10, 20);
}

std::vector<double> default_orders() { return {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5}; }

ScaleRange default_fit_range(std::size_t n, std::span<const std::size_t> scales) {
  if (scales.empty()) throw std::invalid_argument("default_fit_range: empty scale grid");
  ScaleRange r{static_cast<double>(scales.front()) * std::sqrt(10.0),
               static_cast<double>(n) / 100.0};
  std::size_t inside = 0;
  for (auto s : scales) {
    if (static_cast<double>(s) >= r.lo && static_cast<double>(s) <= r.hi) ++inside;
  }
  if (inside < 4) {
    r = {static_cast<double>(scales.front()), static_cast<double>(scales.back())};
  }
  return r;
}

std::vector<Exponent> dfa_hurst(const FluctuationSpectrum& sp, ScaleRange range,
                                double r2_min) {
  return fit_exponents(sp, range, r2_min, false);
}

std::vector<Exponent> gdfa_tau(const FluctuationSpectrum& sp, ScaleRange range,
                               double r2_min) {
  return fit_exponents(sp, range, r2_min, true);
}

std::vector<Exponent> dfa_hurst(std::span<const double> profile,
                                std::vector<std::size_t> scales,
                                std::vector<double> orders, ScaleRange range) {
  return dfa_hurst(fluctuation_spectrum(profile, std::move(scales), std::move(orders)), range);
}

std::vector<Exponent> gdfa_tau(std::span<const double> profile,
                               std::vector<std::size_t> scales,
                               std::vector<double> orders, ScaleRange range) {
  return gdfa_tau(fluctuation_spectrum(profile, std::move(scales), std::move(orders)), range);
}

MultifractalVerdict stationarity_test_multifractal(const std::vector<Exponent>& h,
                                                   const std::vector<Exponent>& tau,
                                                   double tolerance,
                                                   std::vector<double> verdict_orders,
                                                   double monofractal_z) {
  if (h.size() != tau.size() || h.empty()) {
    throw std::invalid_argument("stationarity_test_multifractal: order grids differ");
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].order != tau[i].order) {
      throw std::invalid_argument("stationarity_test_multifractal: order grids differ");
    }
  }
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("stationarity_test_multifractal: tolerance must be positive");
  }
  MultifractalVerdict v;
  v.tolerance = tolerance;
  v.monofractal_z = monofractal_z;
  if (verdict_orders.empty()) {
    for (const auto& e : h) {
      if (e.order > 0.0) verdict_orders.push_back(e.order);
    }
  }
  v.verdict_orders = verdict_orders;
  v.all_linear = true;
  std::size_t used = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double w = h[i].order;
    const double d = std::abs(tau[i].value - (w * h[i].value - 1.0));
    v.orders.push_back(w);
    v.deviations.push_back(d);
    v.all_linear = v.all_linear && h[i].linear && tau[i].linear;
    if (std::find(verdict_orders.begin(), verdict_orders.end(), w) != verdict_orders.end()) {
      v.max_deviation = std::max(v.max_deviation, d);
      ++used;
    }
  }
  if (used != verdict_orders.size()) {
    throw std::invalid_argument("stationarity_test_multifractal: verdict order not on the grid");
  }
  v.stationary = v.max_deviation <= tolerance;

  std::vector<double> w, hv, tv;
  for (std::size_t i = 0; i < h.size(); ++i) {
    w.push_back(h[i].order);
    hv.push_back(h[i].value);
    tv.push_back(tau[i].value);
  }
  if (w.size() >= 2) {
    const LinearFit lf = fit_line(w, hv);
    v.h_fit.a1 = lf.slope;
    v.h_fit.b1 = lf.intercept;
    v.h_fit.a1_stderr = lf.slope_stderr;
    v.h_fit.b1_stderr = lf.intercept_stderr;
    v.h_fit.r_squared = lf.r_squared;
    // a1 recomputed from each block-deleted replicate of h(w)
    const std::size_t K = h.front().replicates.size();
    std::vector<double> reps;
    for (std::size_t b = 0; b < K; ++b) {
      std::vector<double> hb;
      for (const auto& e : h) hb.push_back(b < e.replicates.size() ? e.replicates[b] : NAN);
      reps.push_back(fit_line(w, hb).slope);
    }
    v.h_fit.a1_jackknife_stderr = jackknife_se(reps);
    const double se = std::isfinite(v.h_fit.a1_jackknife_stderr) ? v.h_fit.a1_jackknife_stderr
                                                                  : v.h_fit.a1_stderr;
    v.monofractal = std::abs(v.h_fit.a1) <= monofractal_z * se;
  }
  if (w.size() >= 3) {
    const QuadraticFit qf = fit_quadratic(w, tv);
    v.tau_fit.a2 = qf.coef[0];
    v.tau_fit.b2 = qf.coef[1];
    v.tau_fit.c2 = qf.coef[2];
    v.tau_fit.a2_stderr = qf.std_error[0];
    v.tau_fit.b2_stderr = qf.std_error[1];
    v.tau_fit.c2_stderr = qf.std_error[2];
    v.tau_fit.r_squared = qf.r_squared;
  }
  return v;
}

ScalingFit analyze_multifractal(std::span<const double> profile, const FractalConfig& cfg) {
  auto scales = cfg.scales.empty() ? default_scales(profile.size()) : cfg.scales;
  auto orders = cfg.orders.empty() ? default_orders() : cfg.orders;
  ScalingFit out;
  out.fit_range = cfg.fit_range ? *cfg.fit_range : default_fit_range(profile.size(), scales);
  out.spectrum = fluctuation_spectrum(profile, std::move(scales), std::move(orders),
                                      cfg.jackknife_blocks);
  out.h = dfa_hurst(out.spectrum, out.fit_range, cfg.r2_min);
  out.tau = gdfa_tau(out.spectrum, out.fit_range, cfg.r2_min);
  out.verdict = stationarity_test_multifractal(out.h, out.tau, cfg.tolerance,
                                               cfg.verdict_orders, cfg.monofractal_z);
  return out;
}

}  // namespace stockstat
