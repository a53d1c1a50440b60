#include "stockstat/trend.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stockstat {

Trend Trend::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) {
    throw std::invalid_argument("polynomial trend needs at least one coefficient");
  }
  Trend t;
  t.kind_ = Kind::Polynomial;
  t.params_ = std::move(coefficients);
  return t;
}

Trend Trend::exponential(double a, double b) {
  Trend t;
  t.kind_ = Kind::Exponential;
  t.params_ = {a, b};
  return t;
}

Trend Trend::parse(const std::string& descriptor) {
  if (descriptor == "zero" || descriptor == "none") return zero();
  const auto colon = descriptor.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("trend descriptor '" + descriptor +
                                "': expected zero, poly:... or exp:a,b");
  }
  const std::string kind = descriptor.substr(0, colon);
  std::vector<double> values;
  std::istringstream in(descriptor.substr(colon + 1));
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw std::invalid_argument("trend descriptor '" + descriptor +
                                  "': bad number '" + item + "'");
    }
    values.push_back(v);
  }
  if (kind == "poly") return polynomial(std::move(values));
  if (kind == "exp") {
    if (values.size() != 2) {
      throw std::invalid_argument("exp trend takes exactly two parameters a,b");
    }
    return exponential(values[0], values[1]);
  }
  throw std::invalid_argument("unknown trend kind '" + kind + "'");
}

double Trend::value(double T) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Polynomial: {
      double acc = 0.0;
      for (auto it = params_.rbegin(); it != params_.rend(); ++it) acc = acc * T + *it;
      return acc;
    }
    case Kind::Exponential:
      return params_[0] * std::exp(params_[1] * T);
  }
  return 0.0;
}

double Trend::derivative(double T) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Polynomial: {
      double acc = 0.0;
      for (std::size_t k = params_.size(); k-- > 1;) {
        acc = acc * T + static_cast<double>(k) * params_[k];
      }
      return acc;
    }
    case Kind::Exponential:
      return params_[0] * params_[1] * std::exp(params_[1] * T);
  }
  return 0.0;
}

std::string Trend::to_string() const {
  if (kind_ == Kind::Zero) return "zero";
  std::ostringstream out;
  out.precision(17);
  out << (kind_ == Kind::Polynomial ? "poly:" : "exp:");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (i) out << ',';
    out << params_[i];
  }
  return out.str();
}

}  // namespace stockstat
