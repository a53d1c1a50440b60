#include "stockstat/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace stockstat::fft {
namespace {

// FFTW's planner is not reentrant; execution of a private plan is.
std::mutex planner_mutex;

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

struct Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    if (plan != nullptr) {
      std::lock_guard lock(planner_mutex);
      fftw_destroy_plan(plan);
    }
  }
};

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x,
                                       std::size_t n) {
  if (n == 0) n = x.size();
  if (n == 0) throw std::invalid_argument("rfft: empty input");
  if (n < x.size()) throw std::invalid_argument("rfft: n shorter than input");

  auto in = fftw_buffer<double>(n);
  auto out = fftw_buffer<fftw_complex>(n / 2 + 1);
  Plan p;
  {
    std::lock_guard lock(planner_mutex);
    // FFTW_ESTIMATE leaves the buffers untouched and picks the same
    // algorithm for a given length every time.
    p.plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                                  FFTW_ESTIMATE);
  }
  std::fill(in.get(), in.get() + n, 0.0);
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute(p.plan);

  std::vector<std::complex<double>> result(n / 2 + 1);
  for (std::size_t k = 0; k < result.size(); ++k) {
    result[k] = {out[k][0], out[k][1]};
  }
  return result;
}

std::vector<double> irfft(std::span<const std::complex<double>> spectrum,
                          std::size_t n) {
  if (n == 0 || spectrum.size() != n / 2 + 1) {
    throw std::invalid_argument("irfft: spectrum length must be n/2 + 1");
  }
  auto in = fftw_buffer<fftw_complex>(spectrum.size());
  auto out = fftw_buffer<double>(n);
  Plan p;
  {
    std::lock_guard lock(planner_mutex);
    p.plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(),
                                  FFTW_ESTIMATE);
  }
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    in[k][0] = spectrum[k].real();
    in[k][1] = spectrum[k].imag();
  }
  fftw_execute(p.plan);

  std::vector<double> result(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : result) v *= scale;
  return result;
}

}  // namespace stockstat::fft
