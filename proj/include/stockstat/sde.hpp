#pragma once

// Monte-Carlo paths of the Langevin equation dX = D1 dT + sqrt(2 D2) dW
// driven by q-Gaussian increments, the geometric Brownian motion baseline,
// and synthetic index series with a known trend.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stockstat/market_data.hpp"
#include "stockstat/qgauss.hpp"
#include "stockstat/trend.hpp"

namespace stockstat {

enum class SdeKind { QGaussian, Gbm };

/// Everything needed to reproduce an ensemble. Time is the transformed
/// time T; dt is a step in T.
struct SimulationSpec {
  SdeKind kind = SdeKind::QGaussian;
  double x0 = 0.0;
  double dt = 0.01;
  std::size_t steps = 100;
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  /// keep every record_stride-th state (0: initial and terminal only)
  std::size_t record_stride = 0;
  std::size_t threads = 1;

  // q-Gaussian SDE
  Trend drift;                          ///< D1(T) = drift.derivative(T)
  std::optional<double> noise_q;        ///< default: model q, or 1 without a model
  std::optional<QGaussianModel> model;  ///< D2 from the q-Gaussian density
  std::optional<double> constant_D2;    ///< used when no model is given
  DiffusionConvention convention = DiffusionConvention::SelfConsistent;
  double T0 = 0.0;                      ///< start time; must be > 0 with a model
  bool sample_initial = false;          ///< X(T0) drawn from the model density

  // GBM
  double mu = 0.0;
  double sigma = 0.0;
};

struct PathEnsemble {
  std::vector<double> times;               ///< recorded T values
  std::vector<std::vector<double>> paths;  ///< paths[p][i] at times[i]
  std::size_t clamped = 0;                 ///< D2 < 0 occurrences set to 0
  std::vector<std::string> warnings;

  std::vector<double> terminal() const;
};

/// Euler-Maruyama with iid unit-variance q-Gaussian increments scaled by
/// sqrt(dt). For q >= 5/3 the variance is infinite; increments then use
/// beta = 1/(3-q) and a warning is recorded.
PathEnsemble simulate_qsde(const SimulationSpec& spec);

/// Exact log-space update I <- I exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z).
PathEnsemble simulate_gbm(const SimulationSpec& spec);

/// Dispatches on spec.kind.
PathEnsemble simulate(const SimulationSpec& spec);

/// Known trend plus cumulative q-Gaussian noise on a one-minute grid:
/// I(t) = trend(t) + sum_{u<=t} x_u, x_u drawn from `noise` at t = 1.
/// Without noise the series is the bare trend. Needs length >= 1000.
PriceSeries synthetic_index(const Trend& trend, const std::optional<QGaussianModel>& noise,
                            std::size_t length, std::uint64_t seed,
                            Timestamp start = Timestamp{std::chrono::seconds{946684800}});

}  // namespace stockstat
