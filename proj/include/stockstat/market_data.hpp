#pragma once

// Index price series: loading, validation and artifact cleansing.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stockstat {

using Timestamp = std::chrono::sys_seconds;

/// Timestamped index levels. Timestamps are strictly increasing, prices are
/// finite (negative levels are allowed) and the series has at least two
/// samples. Construction validates; instances are immutable.
class PriceSeries {
 public:
  PriceSeries(std::vector<Timestamp> timestamps, std::vector<double> prices,
              std::string label = {});

  std::size_t size() const noexcept { return prices_.size(); }
  std::span<const Timestamp> timestamps() const noexcept { return timestamps_; }
  std::span<const double> prices() const noexcept { return prices_; }
  const std::string& label() const noexcept { return label_; }

  /// Copy of this series with the same timestamps and new prices.
  PriceSeries with_prices(std::vector<double> prices) const;

  /// Observed sampling density: samples per 30.4375-day month over the
  /// spanned interval.
  double samples_per_month() const;

 private:
  std::vector<Timestamp> timestamps_;
  std::vector<double> prices_;
  std::string label_;
};

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string price_column = "price";
  char delimiter = ',';
};

/// Parses "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM[:SS][Z]" or integer epoch
/// seconds. Throws std::invalid_argument on anything else.
Timestamp parse_timestamp(const std::string& text);

/// ISO-8601 UTC rendering, "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

/// Reads a header-row CSV. Rows with unparsable fields, duplicated or
/// decreasing timestamps raise CsvError carrying the file line number.
PriceSeries load_csv(const std::filesystem::path& path,
                     const CsvSchema& schema = {});

/// Writes "timestamp,price" with ISO timestamps and 17 significant digits.
void write_csv(const std::filesystem::path& path, const PriceSeries& series);

/// A short-lived spurious excursion that reverted to its starting level.
struct ArtifactEvent {
  std::size_t start_index = 0;  ///< first sample of the excursion
  std::size_t duration = 0;     ///< samples replaced
  double pre_level = 0.0;
  double peak_level = 0.0;      ///< level furthest from pre_level
};

struct ArtifactOptions {
  double rel_jump_threshold = 0.05;
  std::size_t max_duration = 8;
  double reversion_tolerance = 0.01;
};

struct CleanResult {
  PriceSeries series;
  std::vector<ArtifactEvent> events;
};

/// Detects jumps of at least rel_jump_threshold (relative to |pre-jump
/// level|) that come back within reversion_tolerance of the pre-jump level
/// inside max_duration samples, and replaces the excursion by a straight
/// line between the bracketing samples. Length and timestamps are kept,
/// samples outside detected events are untouched.
CleanResult remove_artifacts(const PriceSeries& series,
                             const ArtifactOptions& options = {});

}  // namespace stockstat
