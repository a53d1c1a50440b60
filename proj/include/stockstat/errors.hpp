#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stockstat {

/// Raised when a sample window has zero central second moment.
class DegenerateWindowError : public std::runtime_error {
 public:
  DegenerateWindowError(const std::string& what, std::size_t window_index)
      : std::runtime_error(what), window_index_(window_index) {}

  /// Zero-based index of the offending window (0 for a single sequence).
  std::size_t window_index() const noexcept { return window_index_; }

 private:
  std::size_t window_index_;
};

/// CSV input rejected; row() is the 1-based line number in the file.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// An iterative fit stopped without meeting its convergence criterion.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stockstat
