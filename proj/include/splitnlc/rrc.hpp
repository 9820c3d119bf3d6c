#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/fft.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc {

/// Root-raised-cosine pulse shaping filter description.
struct RrcSpec {
  double roll_off = 0.01;
  int span_symbols = 256;      // filter length in symbols (two-sided)
  int samples_per_symbol = 2;
};

/// Unit-energy, odd-length, symmetric RRC taps sampled at
/// span_symbols * samples_per_symbol + 1 points.  roll_off = 0 degenerates to
/// a truncated sinc.
inline std::vector<double> rrc_taps(const RrcSpec& spec) {
  const double beta = spec.roll_off;
  if (beta < 0.0 || beta > 1.0) throw ParameterError("rrc_taps: roll_off outside [0,1]");
  if (spec.span_symbols < 8) throw ParameterError("rrc_taps: span_symbols < 8");
  if (spec.samples_per_symbol < 2) throw ParameterError("rrc_taps: samples_per_symbol < 2");

  const int sps = spec.samples_per_symbol;
  const int n_taps = spec.span_symbols * sps + 1;
  const int mid = n_taps / 2;
  std::vector<double> h(n_taps);

  for (int i = 0; i < n_taps; ++i) {
    const double t = static_cast<double>(i - mid) / sps;  // in symbol periods
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 + beta * (4.0 / M_PI - 1.0);
    } else if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
      const double a = M_PI / (4.0 * beta);
      v = (beta / std::sqrt(2.0)) *
          ((1.0 + 2.0 / M_PI) * std::sin(a) + (1.0 - 2.0 / M_PI) * std::cos(a));
    } else {
      const double num = std::sin(M_PI * t * (1.0 - beta)) +
                         4.0 * beta * t * std::cos(M_PI * t * (1.0 + beta));
      const double den = M_PI * t * (1.0 - std::pow(4.0 * beta * t, 2.0));
      v = num / den;
    }
    h[i] = v;
  }

  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& v : h) v *= scale;
  return h;
}

/// Zero-phase spectral response of the RRC on an n_fft-bin cyclic grid whose
/// bin spacing matches taps sampled at `sps` per symbol (i.e. the grid spans
/// sps * symbol_rate).  The taps are centered at index 0 so the response is
/// real; a symmetric filter keeps symbol instants on their sample indices.
inline std::vector<double> rrc_response(const RrcSpec& spec, std::size_t n_fft) {
  const auto taps = rrc_taps(spec);
  const std::size_t mid = taps.size() / 2;
  if (taps.size() > n_fft) throw ParameterError("rrc_response: grid shorter than filter");
  cvec buf(n_fft, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < taps.size(); ++i) {
    // rotate so the center tap sits at bin 0 (zero phase)
    const auto idx = (i + n_fft - mid) % n_fft;
    buf[idx] = cplx{taps[i], 0.0};
  }
  fft::forward(buf);
  std::vector<double> resp(n_fft);
  for (std::size_t k = 0; k < n_fft; ++k) resp[k] = buf[k].real();
  return resp;
}

}  // namespace splitnlc
