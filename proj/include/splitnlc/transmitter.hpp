#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/fft.hpp"
#include "splitnlc/frame.hpp"
#include "splitnlc/rrc.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc {

/// Laser line: Lorentzian linewidth (Wiener phase noise) plus a static
/// frequency offset.
struct LaserSpec {
  double linewidth = 100e3;        // Hz
  double frequency_offset = 0.0;   // Hz
  std::uint64_t prng_seed = 1;
};

/// WDM grid description.
struct SuperchannelSpec {
  int channel_count = 1;
  double spacing = 50e9;               // Hz
  std::vector<ModulationSpec> per_channel;
  double center_wavelength = 1553e-9;  // m

  double channel_offset(int idx) const {
    return (static_cast<double>(idx) - (channel_count - 1) / 2.0) * spacing;
  }

  void validate() const {
    if (channel_count < 1) throw ParameterError("SuperchannelSpec: channel_count < 1");
    if (static_cast<int>(per_channel.size()) != channel_count)
      throw ParameterError("SuperchannelSpec: per_channel size mismatch");
    for (const auto& m : per_channel) m.validate();
  }
};

/// RRC-shape a frame into a waveform.  Shaping is done zero-phase on the
/// cyclic block at 2 samples/symbol, so symbol k peaks exactly at sample
/// 2k; other rates are reached by band-limited resampling.
inline DualPolSignal modulate_channel(const TxFrame& frame, const ModulationSpec& mod,
                                      double sample_rate) {
  if (sample_rate < (1.0 + mod.roll_off) * mod.symbol_rate)
    throw AliasingError("modulate_channel: sample rate below occupied bandwidth");
  const std::size_t n_sym = frame.size();
  const std::size_t n = 2 * n_sym;
  DualPolSignal s = DualPolSignal::zeros(n, 2.0 * mod.symbol_rate);
  for (std::size_t k = 0; k < n_sym; ++k) {
    s.x[2 * k] = frame.symbols_x[k];
    s.y[2 * k] = frame.symbols_y[k];
  }
  RrcSpec rrc{mod.roll_off, std::min<int>(256, static_cast<int>(n_sym) / 2), 2};
  const auto resp = rrc_response(rrc, n);
  fft::forward(s.x);
  fft::forward(s.y);
  for (std::size_t k = 0; k < n; ++k) {
    s.x[k] *= resp[k];
    s.y[k] *= resp[k];
  }
  fft::inverse(s.x);
  fft::inverse(s.y);
  if (sample_rate != s.sample_rate) s = resample(std::move(s), sample_rate);
  s.center_offset = 0.0;
  return s;
}

/// Multiply by the laser's phase process: a Wiener walk with per-sample
/// increment variance 2 pi linewidth / fs, starting at phase 0, plus the
/// static frequency offset.  Deterministic in the spec's seed.
inline DualPolSignal apply_laser(DualPolSignal s, const LaserSpec& laser) {
  if (laser.linewidth < 0.0) throw ParameterError("apply_laser: negative linewidth");
  if (laser.linewidth == 0.0 && laser.frequency_offset == 0.0) return s;
  const double fs = s.sample_rate;
  const double inc_std = std::sqrt(2.0 * M_PI * laser.linewidth / fs);
  const double off_step = 2.0 * M_PI * laser.frequency_offset / fs;
  Rng rng(laser.prng_seed);
  double phase = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const cplx ph = std::polar(1.0, phase + off_step * static_cast<double>(n));
    s.x[n] *= ph;
    s.y[n] *= ph;
    phase += inc_std * rng.gaussian();
  }
  s.center_offset += laser.frequency_offset;
  return s;
}

/// Add white circular Gaussian noise such that signal power over noise power
/// inside reference_bandwidth equals snr_db.  +inf snr is a no-noise sentinel.
inline DualPolSignal apply_awgn(DualPolSignal s, double snr_db, double reference_bandwidth,
                                std::uint64_t seed) {
  if (reference_bandwidth <= 0.0) throw ParameterError("apply_awgn: reference bandwidth <= 0");
  if (std::isinf(snr_db) && snr_db > 0.0) return s;
  const double psd = mean_power_w(s) / (db_to_lin(snr_db) * reference_bandwidth);
  Rng rng(seed);
  add_white_noise(s, psd, rng);
  return s;
}

namespace detail {

/// Grid offsets are snapped to the nearest FFT bin of the composite block so
/// the cyclic waveform stays exactly periodic through the whole pipeline; the
/// receiver applies the same snapping when demultiplexing.
inline double snapped_offset(double offset, double sample_rate, std::size_t n) {
  const double bin = sample_rate / static_cast<double>(n);
  return std::round(offset / bin) * bin;
}

}  // namespace detail

/// Sum frequency-shifted channels onto the grid at the composite rate.
/// Per-channel power is preserved (the 1% roll-off bands do not overlap).
inline DualPolSignal mux_superchannel(const std::vector<DualPolSignal>& channels,
                                      const SuperchannelSpec& spec, double composite_rate) {
  spec.validate();
  if (channels.size() != static_cast<std::size_t>(spec.channel_count))
    throw ParameterError("mux_superchannel: channel count mismatch");
  const double occupied = (spec.channel_count - 1) * spec.spacing +
                          (1.0 + spec.per_channel.front().roll_off) *
                              spec.per_channel.front().symbol_rate;
  if (occupied > composite_rate)
    throw AliasingError("mux_superchannel: grid exceeds composite Nyquist band");

  DualPolSignal out;
  bool first = true;
  for (int c = 0; c < spec.channel_count; ++c) {
    DualPolSignal ch = resample(channels[c], composite_rate);
    if (first) {
      out = DualPolSignal::zeros(ch.size(), composite_rate);
      first = false;
    }
    const double off = detail::snapped_offset(spec.channel_offset(c), composite_rate, out.size());
    ch = frequency_shift(std::move(ch), off);
    for (std::size_t n = 0; n < out.size(); ++n) {
      out.x[n] += ch.x[n];
      out.y[n] += ch.y[n];
    }
  }
  out.center_offset = 0.0;
  return out;
}

}  // namespace splitnlc
