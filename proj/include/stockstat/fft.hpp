#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace stockstat::fft {

/// Forward real-to-complex DFT, X[k] = sum_t x[t] exp(-2 pi i k t / n),
/// k = 0 .. n/2. When n > x.size() the input is zero-padded.
std::vector<std::complex<double>> rfft(std::span<const double> x,
                                       std::size_t n = 0);

/// Inverse of rfft for a length-n real signal (includes the 1/n factor).
std::vector<double> irfft(std::span<const std::complex<double>> spectrum,
                          std::size_t n);

}  // namespace stockstat::fft
