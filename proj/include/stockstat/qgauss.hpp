#pragma once

// q-Gaussian densities, sampling and fitting, and the coefficients of the
// linear Fokker-Planck equation whose solution they are.
//
// Density at time t (1 < q < 3):
//
//   P(x, t) = 1 / (W(t) C_q) * [1 + (q - 1) x^2 / W(t)^2]^(-1 / (q - 1)),
//   W(t)    = (D t)^(1 / alpha).
//
// In the transformed time T = t^xi, xi = (3 - q) / alpha, the width is
// W = (D^xi T)^(1 / (3 - q)) and P solves a porous-medium equation
// dP/dT = K d^2(P^(2-q))/dX^2 (minus a drift term when the trend moves).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "stockstat/trend.hpp"

namespace stockstat {

/// Scale parameters of the q-Gaussian return density. Invariants:
/// 1 < q < 3, alpha > 0, D > 0 (enforced by the constructor).
class QGaussianModel {
 public:
  QGaussianModel(double q, double alpha, double D);

  double q() const noexcept { return q_; }
  double alpha() const noexcept { return alpha_; }
  double D() const noexcept { return D_; }
  /// (3 - q) / alpha
  double xi() const noexcept { return xi_; }

  /// W(t) = (D t)^(1/alpha); the inverse square root of beta.
  double width(double t) const;
  /// The same width expressed in transformed time T = t^xi.
  double width_transformed(double T) const;

 private:
  double q_, alpha_, D_, xi_;
};

/// Normalisation constant C_q for 1 < q < 3.
double c_q(double q);

/// Integral of [1 - (1 - q) x^2]^(1 / (1 - q)) over its support, for any
/// q < 3 (compact support when q < 1, Gaussian integral sqrt(pi) at q = 1).
double qgaussian_normalization(double q);

double qgaussian_pdf(double x, const QGaussianModel& model, double t);
double qgaussian_cdf(double x, const QGaussianModel& model, double t);

/// Density of the two-parameter family p(x) ∝ [1 - (1-q) beta x^2]^(1/(1-q))
/// for q < 3 (zero outside the support when q < 1).
double qgaussian_density(double x, double q, double beta);

/// Uniform deviate in the open interval (0, 1) from 53 random bits.
double open_unit_uniform(std::mt19937_64& rng);

/// One draw from p(x) ∝ [1 + (q-1) beta x^2]^(-1/(q-1)) by the generalised
/// Box-Muller transform.
double draw_qgaussian(double q, double beta, std::mt19937_64& rng);

/// n iid draws from qgaussian_pdf(., model, t) (generalised Box-Muller).
/// Deterministic for a given seed. q >= 5/3 issues an infinite-variance
/// warning but still samples.
std::vector<double> sample_qgaussian(const QGaussianModel& model, double t,
                                     std::size_t n, std::uint64_t seed);
std::vector<double> sample_qgaussian(const QGaussianModel& model, double t,
                                     std::size_t n, std::mt19937_64& rng);

/// Same distribution by numerical inversion of the CDF; used to
/// cross-check the Box-Muller sampler.
std::vector<double> sample_qgaussian_inverse_cdf(const QGaussianModel& model,
                                                 double t, std::size_t n,
                                                 std::uint64_t seed);

struct QGaussianFit {
  double q = 0.0;
  double beta = 0.0;
  double q_stderr = 0.0;     ///< from the observed information matrix
  double beta_stderr = 0.0;
  double goodness = 0.0;     ///< log-likelihood per sample
  std::size_t samples = 0;
};

/// Maximum-likelihood fit of (q, beta) on raw samples (n >= 1000). The
/// search covers 0.5 < q < 2.95; ending on a bound or exhausting the
/// iteration budget raises ConvergenceError with the final iterate.
QGaussianFit fit_qgaussian(std::span<const double> samples);

struct ScalingLawFit {
  double alpha = 0.0;
  double D = 0.0;
  double slope = 0.0;  ///< of log beta against log t, equals -2 / alpha
  double slope_stderr = 0.0;
  double alpha_stderr = 0.0;
};

/// Fits beta(t) = (D t)^(-2/alpha) by least squares on log beta vs log t.
ScalingLawFit fit_scaling(std::span<const double> lags,
                          std::span<const double> betas);

/// Diffusion constant in front of d^2(P^(2-q))/dX^2.
enum class DiffusionConvention {
  /// D^xi * C_q^(1-q) / (2 (2-q) (3-q)): the value for which the q-Gaussian
  /// is an exact solution.
  SelfConsistent,
  /// The bare D^xi. The q-Gaussian does not
  /// solve the equation with this constant.
  Literal,
};

double pde_diffusivity(const QGaussianModel& model,
                       DiffusionConvention convention = DiffusionConvention::SelfConsistent);

struct FPECoefficients {
  double D1 = 0.0;  ///< drift, dX̄/dT
  double D2 = 0.0;  ///< diffusion, K * P(X, T)^(1 - q)
};

/// Drift and diffusion of the linear Fokker-Planck equation at (X, T),
/// T > 0. The literal convention reproduces
/// D2 = D^(2/alpha) C_q^(q-1) T^((q-1)/(3-q)) [1 - (1-q)(X - X̄)^2 / W^2].
FPECoefficients fpe_coefficients(const QGaussianModel& model, const Trend& trend,
                                 double X, double T,
                                 DiffusionConvention convention =
                                     DiffusionConvention::SelfConsistent);

/// The drifting q-Gaussian P(X, T) in transformed time.
double qgaussian_pdf_transformed(double X, const QGaussianModel& model,
                                 const Trend& trend, double T);

struct UniformGrid {
  double start = 0.0;
  double step = 0.0;
  std::size_t points = 0;
  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
};

using DensityField = std::function<double(double X, double T)>;

/// Max-norm over interior nodes of
///   dP/dT - K d^2(P^(2-q))/dX^2 + dX̄/dT dP/dX
/// with second-order central differences. Grids need >= 5 points, positive
/// steps and T > 0 throughout.
double pde_residual(const DensityField& density, const QGaussianModel& model,
                    const Trend& trend, const UniformGrid& x_grid,
                    const UniformGrid& T_grid,
                    DiffusionConvention convention = DiffusionConvention::SelfConsistent);

/// pde_residual of the model's own analytic solution.
double pde_residual(const QGaussianModel& model, const Trend& trend,
                    const UniformGrid& x_grid, const UniformGrid& T_grid,
                    DiffusionConvention convention = DiffusionConvention::SelfConsistent);

/// T = t^xi and its inverse.
double to_transformed_time(double t, const QGaussianModel& model);
double to_physical_time(double T, const QGaussianModel& model);

}  // namespace stockstat
