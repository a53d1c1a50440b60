#pragma once

#include <string>
#include <vector>

namespace stockstat {

/// A smooth deterministic trend X̄(T) with an analytic derivative.
///
/// Text form (used on the command line):
///   "zero"
///   "poly:c0,c1,c2,..."   X̄(T) = c0 + c1 T + c2 T^2 + ...
///   "exp:a,b"             X̄(T) = a exp(b T)
class Trend {
 public:
  enum class Kind { Zero, Polynomial, Exponential };

  Trend() = default;
  static Trend zero() { return {}; }
  static Trend polynomial(std::vector<double> coefficients);
  static Trend exponential(double a, double b);
  /// Throws std::invalid_argument for malformed descriptors.
  static Trend parse(const std::string& descriptor);

  double value(double T) const;
  double derivative(double T) const;

  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  std::string to_string() const;

 private:
  Kind kind_ = Kind::Zero;
  std::vector<double> params_;
};

}  // namespace stockstat
