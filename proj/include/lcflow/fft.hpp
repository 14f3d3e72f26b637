#pragma once

// Thin RAII layer over FFTW's complex transforms. Plans are created once per
// size and shared; execution uses the new-array interface, which FFTW
// guarantees to be thread-safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace lcflow {

using cplx = std::complex<double>;

namespace detail {

class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    std::vector<cplx> a(n), b(n);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, flags);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return n_; }
  fftw_plan forward() const { return forward_; }
  fftw_plan backward() const { return backward_; }

 private:
  std::size_t n_;
  fftw_plan forward_;
  fftw_plan backward_;
};

inline const FftPlan& plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

}  // namespace detail

/// Unnormalised forward DFT: X_j = sum_k x_k exp(-2 pi i j k / n).
inline std::vector<cplx> fft(std::span<const cplx> x) {
  std::vector<cplx> in(x.begin(), x.end()), out(x.size());
  const auto& plan = detail::plan_for(x.size());
  fftw_execute_dft(plan.forward(), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Normalised inverse DFT (divides by n), so ifft(fft(x)) == x.
inline std::vector<cplx> ifft(std::span<const cplx> X) {
  std::vector<cplx> in(X.begin(), X.end()), out(X.size());
  const auto& plan = detail::plan_for(X.size());
  fftw_execute_dft(plan.backward(), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(X.size());
  for (auto& v : out) v *= scale;
  return out;
}

inline std::vector<cplx> fft_real(std::span<const double> x) {
  std::vector<cplx> c(x.begin(), x.end());
  return fft(c);
}

/// Signed integer wavenumber of DFT bin j; the Nyquist bin maps to -n/2.
inline long wavenumber(std::size_t j, std::size_t n) {
  const long jj = static_cast<long>(j);
  const long nn = static_cast<long>(n);
  return jj < nn / 2 ? jj : jj - nn;
}

}  // namespace lcflow
