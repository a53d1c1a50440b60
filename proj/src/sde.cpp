#include "stockstat/sde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "stockstat/diagnostics.hpp"

namespace stockstat {
namespace {

std::mt19937_64 path_rng(std::uint64_t seed, std::size_t path) {
  const auto p = static_cast<std::uint64_t>(path);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
  return std::mt19937_64(seq);
}

void validate_common(const SimulationSpec& s) {
  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) throw std::invalid_argument("simulate: dt must be > 0");
  if (s.steps < 1) throw std::invalid_argument("simulate: steps must be >= 1");
  if (s.paths < 1) throw std::invalid_argument("simulate: paths must be >= 1");
}

std::vector<double> record_times(const SimulationSpec& s, double t0) {
  std::vector<double> t;
  for (std::size_t n = 0; n <= s.steps; ++n) {
    const bool keep = n == 0 || n == s.steps || (s.record_stride > 0 && n % s.record_stride == 0);
    if (keep) t.push_back(t0 + static_cast<double>(n) * s.dt);
  }
  return t;
}

bool recorded(const SimulationSpec& s, std::size_t n) {
  return n == s.steps || (s.record_stride > 0 && n % s.record_stride == 0);
}

// runs body(p) for every path, spread over the requested threads
template <typename Body>
void for_paths(std::size_t paths, std::size_t threads, Body body) {
  threads = std::clamp<std::size_t>(threads, 1, paths);
  if (threads == 1) {
    for (std::size_t p = 0; p < paths; ++p) body(p, 0);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < threads; ++k) {
    pool.emplace_back([=, &body] {
      for (std::size_t p = k; p < paths; p += threads) body(p, k);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> PathEnsemble::terminal() const {
  std::vector<double> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(p.back());
  return out;
}

PathEnsemble simulate_qsde(const SimulationSpec& s) {
  validate_common(s);
  const double q = s.noise_q ? *s.noise_q : (s.model ? s.model->q() : 1.0);
  if (!(q >= 1.0 && q < 3.0)) throw std::invalid_argument("simulate_qsde: noise q must be in [1, 3)");
  if (!s.model && !s.constant_D2) {
    throw std::invalid_argument("simulate_qsde: need a model or a constant D2");
  }
  if (s.constant_D2 && !(*s.constant_D2 >= 0.0)) {
    throw std::invalid_argument("simulate_qsde: constant D2 must be >= 0");
  }
  if (s.model && !s.constant_D2 && !(s.T0 > 0.0)) {
    throw std::invalid_argument("simulate_qsde: model-derived D2 needs T0 > 0");
  }
  if (s.sample_initial && !(s.model && s.T0 > 0.0)) {
    throw std::invalid_argument("simulate_qsde: sampling X(T0) needs a model and T0 > 0");
  }

  PathEnsemble ens;
  double beta = 0.0;
  if (q < 5.0 / 3.0) {
    beta = 1.0 / (5.0 - 3.0 * q);  // unit variance
  } else {
    beta = 1.0 / (3.0 - q);
    ens.warnings.push_back("noise q >= 5/3 has infinite variance; using beta = 1/(3-q)");
    warn(ens.warnings.back());
  }
  ens.times = record_times(s, s.T0);
  ens.paths.assign(s.paths, {});

  // per-step drift, trend level, width and D2 prefactor, shared by all paths
  std::vector<double> d1(s.steps), level(s.steps), width(s.steps), pref(s.steps);
  for (std::size_t n = 0; n < s.steps; ++n) {
    const double T = s.T0 + static_cast<double>(n) * s.dt;
    d1[n] = s.drift.derivative(T);
    if (s.model && !s.constant_D2) {
      const double mq = s.model->q();
      level[n] = s.drift.value(T);
      width[n] = s.model->width_transformed(T);
      pref[n] = pde_diffusivity(*s.model, s.convention) *
                std::pow(width[n] * c_q(mq), mq - 1.0);
    }
  }
  std::vector<std::size_t> clamps(std::max<std::size_t>(s.threads, 1), 0);

  for_paths(s.paths, s.threads, [&](std::size_t p, std::size_t worker) {
    auto rng = path_rng(s.seed, p);
    std::vector<double> rec;
    rec.reserve(ens.times.size());
    double x = s.x0;
    if (s.sample_initial) {
      const double w = s.model->width_transformed(s.T0);
      x = s.drift.value(s.T0) + draw_qgaussian(s.model->q(), 1.0 / (w * w), rng);
    }
    rec.push_back(x);
    for (std::size_t n = 0; n < s.steps; ++n) {
      double d2 = 0.0;
      if (s.constant_D2) {
        d2 = *s.constant_D2;
      } else {
        // same expression as fpe_coefficients
        const double z = (x - level[n]) / width[n];
        d2 = pref[n] * (1.0 - (1.0 - s.model->q()) * z * z);
      }
      if (d2 < 0.0) {
        d2 = 0.0;
        ++clamps[worker];
      }
      const double dw = draw_qgaussian(q, beta, rng);
      x += d1[n] * s.dt + std::sqrt(2.0 * d2 * s.dt) * dw;
      if (recorded(s, n + 1)) rec.push_back(x);
    }
    ens.paths[p] = std::move(rec);
  });
  for (auto c : clamps) ens.clamped += c;
  return ens;
}

PathEnsemble simulate_gbm(const SimulationSpec& s) {
  validate_common(s);
  if (!(s.x0 > 0.0)) throw std::invalid_argument("simulate_gbm: x0 must be > 0");
  if (!(s.sigma >= 0.0) || !std::isfinite(s.mu)) {
    throw std::invalid_argument("simulate_gbm: need finite mu and sigma >= 0");
  }
  PathEnsemble ens;
  ens.times = record_times(s, s.T0);
  ens.paths.assign(s.paths, {});
  const double drift = (s.mu - 0.5 * s.sigma * s.sigma) * s.dt;
  const double vol = s.sigma * std::sqrt(s.dt);
  for_paths(s.paths, s.threads, [&](std::size_t p, std::size_t) {
    auto rng = path_rng(s.seed, p);
    std::vector<double> rec;
    rec.reserve(ens.times.size());
    double logx = std::log(s.x0);
    rec.push_back(s.x0);
    for (std::size_t n = 0; n < s.steps; ++n) {
      // q = 1, beta = 1/2 is the standard normal
      logx += drift + vol * draw_qgaussian(1.0, 0.5, rng);
      if (recorded(s, n + 1)) rec.push_back(std::exp(logx));
    }
    ens.paths[p] = std::move(rec);
  });
  return ens;
}

PathEnsemble simulate(const SimulationSpec& s) {
  return s.kind == SdeKind::Gbm ? simulate_gbm(s) : simulate_qsde(s);
}

PriceSeries synthetic_index(const Trend& trend, const std::optional<QGaussianModel>& noise,
                            std::size_t length, std::uint64_t seed, Timestamp start) {
  if (length < 1000) throw std::invalid_argument("synthetic_index: length must be >= 1000");
  std::vector<double> inc(length, 0.0);
  if (noise) {
    inc = sample_qgaussian(*noise, 1.0, length, seed);
    inc[0] = 0.0;
  }
  std::vector<Timestamp> ts(length);
  std::vector<double> price(length);
  double walk = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    walk += inc[i];
    ts[i] = start + std::chrono::minutes(static_cast<long long>(i));
    price[i] = trend.value(static_cast<double>(i)) + walk;
  }
  return PriceSeries(std::move(ts), std::move(price), "synthetic");
}

}  // namespace stockstat
