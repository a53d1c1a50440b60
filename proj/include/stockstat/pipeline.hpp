#pragma once

// End-to-end run: clean -> window scan -> detrend -> DFA / MF-DFA ->
// ACF, spectrum, Wiener-Khinchin -> q-Gaussian fits, with a JSON report
// and plot-ready CSV files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stockstat/detrend.hpp"
#include "stockstat/fractal.hpp"
#include "stockstat/market_data.hpp"
#include "stockstat/spectral.hpp"

namespace stockstat {

/// Every tunable of a run. Loaded from an INI file with sections
/// [input] [clean] [scan] [detrend] [fractal] [spectral] [qfit] [output];
/// see README for the keys.
struct PipelineConfig {
  // [input]
  std::filesystem::path input;
  CsvSchema schema;

  // [clean]
  bool clean = true;
  ArtifactOptions artifacts;

  // [scan]
  bool scan = true;
  double scan_min_months = 1.0;
  double scan_max_months = 25.0;
  double scan_step_months = 1.0;
  std::vector<std::size_t> scan_windows;  ///< samples; overrides the month range
  double scan_target = 3.0;
  KurtosisInput scan_input = KurtosisInput::Levels;

  // [detrend]
  double detrend_window_months = 0.0;  ///< 0: use the scan optimum
  std::size_t detrend_window = 0;      ///< samples; overrides months
  int detrend_order = 0;
  EdgeMode edge = EdgeMode::CountNormalized;

  // [fractal]
  FractalConfig fractal;

  // [spectral]
  std::size_t return_lag = 1;
  std::size_t acf_max_lag = 1000;
  AcfMode acf_mode = AcfMode::MeanSubtracted;
  double smooth_hz = 3.97e-5;
  double sample_seconds = 60.0;
  WienerKhinchinOptions wk;  ///< smoothing_width is derived from smooth_hz
  std::optional<FitInterval> index_fit;  ///< cycles/sample; default [smoothing width, 0.5]

  // [qfit]
  bool qfit = true;
  std::vector<std::size_t> qfit_lags{1, 2, 4, 8, 16};

  // [output]
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;

  /// Checks every parameter against the module preconditions.
  void validate() const;
  /// Canonical JSON form; the config hash is taken over its dump.
  nlohmann::json to_json() const;
};

/// Reads an INI file; unknown sections or keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j);

struct ArtifactSummary {
  std::size_t start_index = 0;
  std::size_t duration = 0;
  double pre_level = 0.0;
  double peak_level = 0.0;
};

struct ScanSummary {
  std::vector<std::size_t> windows;
  std::vector<double> mean_kurtosis;
  std::vector<double> std_error;
  std::size_t optimal_window = 0;
  double optimal_months = 0.0;
  bool qualified = false;
};

struct DetrendSummary {
  std::size_t window = 0;
  double window_months = 0.0;
  int poly_order = 0;
  std::string edge_mode;
  double fluctuation_mean = 0.0;
  double fluctuation_std = 0.0;
  double reconstruction_error = 0.0;  ///< max |I - (trend + fluctuation)|
};

struct ExponentSummary {
  double order = 0.0;
  double h = 0.0, h_stderr = 0.0, h_jackknife = 0.0, h_r2 = 0.0;
  double tau = 0.0, tau_stderr = 0.0, tau_r2 = 0.0;
  double deviation = 0.0;
};

struct MultifractalSummary {
  double fit_lo = 0.0, fit_hi = 0.0;
  std::vector<ExponentSummary> exponents;
  std::vector<double> verdict_orders;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool stationary = false;
  HurstLineFit h_fit;
  TauQuadraticFit tau_fit;
  bool monofractal = false;
  bool all_linear = false;
};

struct AcfSummary {
  std::size_t max_lag = 0;
  std::size_t transition_lag = 0;
  std::optional<PowerLawFit> gamma;
  std::string note;
};

struct WkSummary {
  double median_deviation = 0.0;
  double tolerance = 0.0;
  bool stationary = false;
  std::size_t smoothing_window = 0;
  std::size_t max_lag = 0;
};

struct QFitSummary {
  std::size_t lag = 0;
  double q = 0.0, q_stderr = 0.0, beta = 0.0, beta_stderr = 0.0, goodness = 0.0;
};

struct ScalingSummary {
  double alpha = 0.0, alpha_stderr = 0.0, D = 0.0;
};

struct Provenance {
  std::string config_hash;  ///< FNV-1a 64 of the canonical config JSON
  std::uint64_t seed = 0;
  std::string version;
  nlohmann::json config;
};

/// Summary of a run. to_json / report_from_json round-trip exactly
/// (non-finite numbers are written as strings).
struct StationarityReport {
  std::string input;
  std::size_t samples = 0;
  double samples_per_month = 0.0;
  std::vector<ArtifactSummary> artifacts;
  std::optional<ScanSummary> window_scan;
  std::optional<DetrendSummary> detrend;
  std::optional<MultifractalSummary> test1;
  std::optional<AcfSummary> acf;
  std::optional<WkSummary> test2;
  std::optional<WkSummary> index_wk;         ///< same check on I*, informational
  std::optional<PowerLawFit> index_spectrum;  ///< P(f) of I* against f
  std::vector<QFitSummary> qfits;
  std::optional<ScalingSummary> scaling;
  std::vector<std::string> warnings;
  std::optional<std::string> error;  ///< "stage: cause" when a stage failed
  Provenance provenance;

  bool both_stationary() const;
  nlohmann::json to_json() const;
};

StationarityReport report_from_json(const nlohmann::json& j);

/// Plot-ready tables collected during a run. Empty tables are stages that
/// did not run.
struct PlotData {
  struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    bool empty() const { return rows.empty(); }
  };
  Table window_scan;  ///< window, mean_kurtosis, std_error
  Table detrend;      ///< t, price, trend, fluctuation
  Table fw;           ///< s, w, F
  Table gw;           ///< s, w, G
  Table exponents;    ///< w, h, tau, deviation
  Table acf;          ///< lag, C
  Table spectrum;     ///< f, power, smoothed_power, smoothed_acf_transform
};

/// Raised when a stage fails; the report holds everything computed before.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& cause, StationarityReport partial)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)),
        partial_(std::move(partial)) {}
  const std::string& stage() const noexcept { return stage_; }
  const StationarityReport& partial() const noexcept { return partial_; }

 private:
  std::string stage_;
  StationarityReport partial_;
};

struct PipelineOutput {
  StationarityReport report;
  PlotData plots;
};

/// Runs every stage on already-loaded prices (no files written).
PipelineOutput run_analysis(const PriceSeries& series, const PipelineConfig& config);

/// Loads config.input, runs the analysis and writes report.json plus the
/// plot CSVs under config.out_dir, also when a stage fails (then
/// PipelineError is rethrown after writing).
StationarityReport run_pipeline(const PipelineConfig& config);

/// Writes the non-empty tables as CSV (17 significant digits) and a
/// manifest.json listing written and omitted files. Returns written paths.
std::vector<std::filesystem::path> emit_plot_data(const PlotData& plots,
                                                  const std::filesystem::path& out_dir);

/// Writes a CSV with a header row and 17 significant digits.
void write_table(const std::filesystem::path& path, const PlotData::Table& table);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace stockstat
