#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/fft.hpp"
#include "splitnlc/rng.hpp"

namespace splitnlc {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Sampled dual-polarization complex baseband field.  Amplitudes are in
/// sqrt(W), so mean(|x|^2 + |y|^2) is the mean optical power in watts.
/// center_offset is the offset of the digital baseband center from the
/// optical carrier.  Waveforms are treated as one cyclic block throughout:
/// every spectral operation is a circular convolution.
struct DualPolSignal {
  cvec x;
  cvec y;
  double sample_rate = 0.0;   // Hz
  double center_offset = 0.0; // Hz

  std::size_t size() const { return x.size(); }
  double duration() const { return static_cast<double>(size()) / sample_rate; }

  static DualPolSignal zeros(std::size_t n, double sample_rate) {
    DualPolSignal s;
    s.x.assign(n, cplx{0.0, 0.0});
    s.y.assign(n, cplx{0.0, 0.0});
    s.sample_rate = sample_rate;
    return s;
  }
};

/// Mean power in watts over both polarizations.
inline double mean_power_w(const DualPolSignal& s) {
  double acc = 0.0;
  for (const auto& v : s.x) acc += std::norm(v);
  for (const auto& v : s.y) acc += std::norm(v);
  return acc / static_cast<double>(s.size());
}

/// Peak-to-average power ratio (dB) of the instantaneous two-pol power.
inline double papr_db(const DualPolSignal& s) {
  double peak = 0.0, acc = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double p = std::norm(s.x[n]) + std::norm(s.y[n]);
    peak = std::max(peak, p);
    acc += p;
  }
  return lin_to_db(peak / (acc / static_cast<double>(s.size())));
}

/// Normalized mean square error of `a` against reference `b`, as a linear ratio.
inline double nmse(const DualPolSignal& a, const DualPolSignal& b) {
  double err = 0.0, ref = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    err += std::norm(a.x[n] - b.x[n]) + std::norm(a.y[n] - b.y[n]);
    ref += std::norm(b.x[n]) + std::norm(b.y[n]);
  }
  return err / ref;
}

inline double nmse_db(const DualPolSignal& a, const DualPolSignal& b) {
  return lin_to_db(nmse(a, b));
}

inline double nmse_db(std::span<const cplx> a, std::span<const cplx> b) {
  double err = 0.0, ref = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    err += std::norm(a[n] - b[n]);
    ref += std::norm(b[n]);
  }
  return lin_to_db(err / ref);
}

/// Rescale to the requested mean power.  Pure scaling, waveform shape unchanged.
inline DualPolSignal set_mean_power(DualPolSignal s, double power_dbm) {
  const double current = mean_power_w(s);
  if (current <= 0.0) throw ParameterError("set_mean_power: all-zero signal");
  const double scale = std::sqrt(dbm_to_watt(power_dbm) / current);
  for (auto& v : s.x) v *= scale;
  for (auto& v : s.y) v *= scale;
  return s;
}

/// Combined two-pol power spectrum |X[k]|^2 + |Y[k]|^2 (unnormalized DFT bins).
inline std::vector<double> power_spectrum(const DualPolSignal& s) {
  cvec fx = s.x, fy = s.y;
  fft::forward(fx);
  fft::forward(fy);
  std::vector<double> p(fx.size());
  for (std::size_t k = 0; k < fx.size(); ++k) p[k] = std::norm(fx[k]) + std::norm(fy[k]);
  return p;
}

/// Two-sided band [f_lo, f_hi] containing `fraction` of the total power,
/// trimming equal tails on the sorted frequency axis.
inline std::pair<double, double> occupied_band(const DualPolSignal& s, double fraction = 0.99) {
  const auto p = power_spectrum(s);
  const std::size_t n = p.size();
  double total = 0.0;
  for (double v : p) total += v;
  if (total <= 0.0) return {0.0, 0.0};
  // reorder bins onto the monotone frequency axis [-fs/2, fs/2)
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = (i + n / 2) % n;  // start at most negative frequency
    axis[i] = p[k];
  }
  const double tail = (1.0 - fraction) / 2.0 * total;
  double acc = 0.0;
  std::size_t lo = 0, hi = n - 1;
  while (lo < n && acc + axis[lo] < tail) acc += axis[lo++];
  acc = 0.0;
  while (hi > 0 && acc + axis[hi] < tail) acc += axis[hi--];
  const double fs = s.sample_rate;
  auto freq_of = [&](std::size_t i) {
    return (static_cast<double>(i) - static_cast<double>(n / 2)) * fs / static_cast<double>(n);
  };
  return {freq_of(lo), freq_of(hi)};
}

inline double occupied_bandwidth(const DualPolSignal& s, double fraction = 0.99) {
  auto [lo, hi] = occupied_band(s, fraction);
  return hi - lo;
}

namespace detail {

/// Multiply every sample by exp(i 2 pi delta_f n / fs).  No aliasing guard;
/// content pushed past Nyquist wraps and must be filtered out downstream.
inline void shift_unchecked(DualPolSignal& s, double delta_f) {
  if (delta_f == 0.0) return;
  const double step = 2.0 * M_PI * delta_f / s.sample_rate;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const cplx ph = std::polar(1.0, step * static_cast<double>(n));
    s.x[n] *= ph;
    s.y[n] *= ph;
  }
  s.center_offset += delta_f;
}

/// Fraction of power that a shift by delta_f would wrap across Nyquist.
inline double wrapped_power_fraction(const DualPolSignal& s, double delta_f) {
  const auto p = power_spectrum(s);
  const std::size_t n = p.size();
  double total = 0.0, wrapped = 0.0;
  const double half = s.sample_rate / 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += p[k];
    const double f = fft::bin_frequency(k, n, s.sample_rate) + delta_f;
    if (f >= half || f < -half) wrapped += p[k];
  }
  return total > 0.0 ? wrapped / total : 0.0;
}

}  // namespace detail

/// Shift the baseband spectrum by delta_f.  Power is preserved exactly;
/// throws if more than 0.1% of the signal power would fold across Nyquist.
inline DualPolSignal frequency_shift(DualPolSignal s, double delta_f) {
  if (delta_f == 0.0) return s;
  if (detail::wrapped_power_fraction(s, delta_f) > 1e-3)
    throw AliasingError("frequency_shift: spectrum pushed past Nyquist");
  detail::shift_unchecked(s, delta_f);
  return s;
}

namespace detail {

/// FFT-domain resampler core: copies the spectrum into a grid of new_n bins,
/// splitting/merging the Nyquist bin symmetrically, and rescales so that the
/// mean power (equivalently, per-tone amplitude) is preserved.
inline cvec resample_spectrum(cvec spec, std::size_t new_n) {
  const std::size_t old_n = spec.size();
  if (new_n == old_n) return spec;
  cvec out(new_n, cplx{0.0, 0.0});
  const std::size_t keep = std::min(old_n, new_n);
  const std::size_t half = keep / 2;
  for (std::size_t k = 0; k <= half; ++k) out[k] = spec[k];
  for (std::size_t k = 1; k <= half; ++k) out[new_n - k] = spec[old_n - k];
  if (keep % 2 == 0) {
    if (new_n > old_n) {
      // upsampling: split the old Nyquist bin across +/- Nyquist
      out[half] = spec[half] * 0.5;
      out[new_n - half] = spec[half] * 0.5;
    } else {
      // downsampling: fold the bins that meet at the new Nyquist frequency
      out[half] = spec[half] + spec[old_n - half];
    }
  }
  const double scale = static_cast<double>(new_n) / static_cast<double>(old_n);
  for (auto& v : out) v *= scale;
  return out;
}

inline void resample_unchecked(DualPolSignal& s, double new_rate, std::size_t new_n) {
  fft::forward(s.x);
  fft::forward(s.y);
  s.x = resample_spectrum(std::move(s.x), new_n);
  s.y = resample_spectrum(std::move(s.y), new_n);
  fft::inverse(s.x);
  fft::inverse(s.y);
  s.sample_rate = new_rate;
}

}  // namespace detail

/// Band-limited rate conversion by FFT zero-padding/truncation.  The new rate
/// must give an integer sample count over the cyclic block.  Throws if more
/// than 0.1% of the power lies outside the new Nyquist band (decimation would
/// alias it).
inline DualPolSignal resample(DualPolSignal s, double new_rate) {
  if (new_rate == s.sample_rate) return s;
  const double exact = static_cast<double>(s.size()) * new_rate / s.sample_rate;
  const auto new_n = static_cast<std::size_t>(std::llround(exact));
  if (std::abs(exact - static_cast<double>(new_n)) > 1e-6)
    throw ParameterError("resample: rate ratio not rational over this block");
  if (new_n < 2) throw ParameterError("resample: target rate too low");
  if (new_rate < s.sample_rate) {
    const auto p = power_spectrum(s);
    double total = 0.0, outside = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      total += p[k];
      if (std::abs(fft::bin_frequency(k, p.size(), s.sample_rate)) > new_rate / 2.0)
        outside += p[k];
    }
    if (total > 0.0 && outside / total > 1e-3)
      throw AliasingError("resample: signal occupies more than the target band");
  }
  detail::resample_unchecked(s, new_rate, new_n);
  return s;
}

/// Multiply both polarization spectra by a per-bin transfer function.
inline void apply_transfer(DualPolSignal& s, std::span<const cplx> h) {
  fft::forward(s.x);
  fft::forward(s.y);
  for (std::size_t k = 0; k < s.size(); ++k) {
    s.x[k] *= h[k];
    s.y[k] *= h[k];
  }
  fft::inverse(s.x);
  fft::inverse(s.y);
}

/// Add circular complex Gaussian noise, white over the simulated band, with
/// the given one-sided PSD (W/Hz) summed over both polarizations.
inline void add_white_noise(DualPolSignal& s, double psd_total_w_per_hz, Rng& rng) {
  if (psd_total_w_per_hz <= 0.0) return;
  const double var_per_pol = psd_total_w_per_hz * s.sample_rate / 2.0;
  for (auto& v : s.x) v += rng.complex_gaussian(var_per_pol);
  for (auto& v : s.y) v += rng.complex_gaussian(var_per_pol);
}

}  // namespace splitnlc
