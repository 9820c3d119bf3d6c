#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

namespace splitnlc::fft {

using cvec = std::vector<std::complex<double>>;

namespace detail {

// One in-place c2c plan per (size, direction), created lazily.  Plans are
// created with FFTW_ESTIMATE so plan selection is deterministic from run to
// run (FFTW_MEASURE would time kernels and can pick different algorithms,
// breaking bit-reproducibility of results).  FFTW_UNALIGNED lets the plans
// execute on std::vector storage of any alignment.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int direction) {
    const std::uint64_t key = (static_cast<std::uint64_t>(n) << 1) |
                              (direction == FFTW_FORWARD ? 0u : 1u);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, direction,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::unordered_map<std::uint64_t, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(cvec& v) {
  return reinterpret_cast<fftw_complex*>(v.data());
}

}  // namespace detail

/// In-place forward DFT, unnormalized (X[k] = sum x[n] e^{-i 2pi kn/N}).
inline void forward(cvec& v) {
  fftw_plan p = detail::PlanCache::instance().get(v.size(), FFTW_FORWARD);
  fftw_execute_dft(p, detail::as_fftw(v), detail::as_fftw(v));
}

/// In-place inverse DFT including the 1/N normalization.
inline void inverse(cvec& v) {
  fftw_plan p = detail::PlanCache::instance().get(v.size(), FFTW_BACKWARD);
  fftw_execute_dft(p, detail::as_fftw(v), detail::as_fftw(v));
  const double scale = 1.0 / static_cast<double>(v.size());
  for (auto& z : v) z *= scale;
}

/// Baseband frequency of DFT bin k at sample rate fs (negative for k >= n/2).
inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
  const double idx = (2 * k < n) ? static_cast<double>(k)
                                 : static_cast<double>(k) - static_cast<double>(n);
  return idx * sample_rate / static_cast<double>(n);
}

/// Angular frequency grid (rad/s) matching the DFT bin ordering.
inline std::vector<double> angular_grid(std::size_t n, double sample_rate) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 2.0 * M_PI * bin_frequency(k, n, sample_rate);
  return w;
}

}  // namespace splitnlc::fft
