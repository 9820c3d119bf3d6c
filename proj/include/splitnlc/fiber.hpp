#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/fft.hpp"
#include "splitnlc/rng.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc {

inline constexpr double kSpeedOfLight = 2.99792458e8;    // m/s
inline constexpr double kPlanck = 6.62607015e-34;        // J s

/// Physical fiber coefficients.  Dispersion is given as D (ps/nm/km) and
/// converted to beta2 = -D lambda^2 / (2 pi c) at the reference wavelength.
struct FiberParams {
  double length_km = 76.96;
  double attenuation_db_per_km = 12.2 / 76.96;
  double dispersion_ps_nm_km = 16.7;
  double gamma_per_w_km = 1.1;
  double manakov_factor = 8.0 / 9.0;
  double reference_wavelength = 1553e-9;  // m

  double length_m() const { return length_km * 1e3; }
  /// Power attenuation coefficient, 1/m.
  double alpha_per_m() const { return attenuation_db_per_km * std::log(10.0) / 10.0 / 1e3; }
  /// beta2 in s^2/m (negative for anomalous dispersion).
  double beta2_s2_m() const {
    const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
    return -d_si * reference_wavelength * reference_wavelength / (2.0 * M_PI * kSpeedOfLight);
  }
  double gamma_per_w_m() const { return gamma_per_w_km * 1e-3; }
  double loss_db() const { return attenuation_db_per_km * length_km; }

  void validate() const {
    if (length_km <= 0.0) throw ParameterError("FiberParams: length <= 0");
    if (attenuation_db_per_km < 0.0) throw ParameterError("FiberParams: attenuation < 0");
    if (gamma_per_w_km < 0.0) throw ParameterError("FiberParams: gamma < 0");
  }
};

/// EDFA with flat gain and white ASE.  noise_figure_db = -inf disables ASE.
struct AmpSpec {
  double gain_db = 12.2;
  double noise_figure_db = 5.0;
  std::uint64_t prng_seed = 1;
};

struct SpanSpec {
  FiberParams fiber;
  AmpSpec amp;

  /// Span with the amplifier gain matched to the fiber loss.
  static SpanSpec transparent(const FiberParams& fiber, double noise_figure_db,
                              std::uint64_t seed = 1) {
    return SpanSpec{fiber, AmpSpec{fiber.loss_db(), noise_figure_db, seed}};
  }
};

struct LinkSpec {
  std::vector<SpanSpec> spans;
  double center_frequency = kSpeedOfLight / 1553e-9;  // Hz

  std::size_t span_count() const { return spans.size(); }
  double total_length_km() const {
    double l = 0.0;
    for (const auto& s : spans) l += s.fiber.length_km;
    return l;
  }
  double total_beta2_L() const {  // s^2
    double b = 0.0;
    for (const auto& s : spans) b += s.fiber.beta2_s2_m() * s.fiber.length_m();
    return b;
  }

  static LinkSpec uniform(const FiberParams& fiber, int n_spans, double noise_figure_db,
                          double center_frequency = kSpeedOfLight / 1553e-9) {
    LinkSpec l;
    l.center_frequency = center_frequency;
    for (int i = 0; i < n_spans; ++i)
      l.spans.push_back(SpanSpec::transparent(fiber, noise_figure_db));
    return l;
  }
};

enum class StepDistribution { kUniform, kLogarithmic };

/// Split-step integration settings (symmetric scheme).
struct SsfmConfig {
  int steps_per_span = 1000;
  StepDistribution step_distribution = StepDistribution::kUniform;

  void validate() const {
    if (steps_per_span < 1) throw ParameterError("SsfmConfig: steps_per_span < 1");
  }
};

namespace detail {

/// Step sizes (m) across one span, in forward propagation order.  The
/// logarithmic distribution equalizes the per-step nonlinear phase budget of
/// a lossy span; uniform matches a fixed physical step.
inline std::vector<double> step_sizes(const FiberParams& fiber, const SsfmConfig& cfg) {
  cfg.validate();
  const int n = cfg.steps_per_span;
  const double length = fiber.length_m();
  std::vector<double> h(n);
  if (cfg.step_distribution == StepDistribution::kUniform || fiber.alpha_per_m() == 0.0) {
    for (int i = 0; i < n; ++i) h[i] = length / n;
    return h;
  }
  const double alpha = fiber.alpha_per_m();
  const double total = 1.0 - std::exp(-alpha * length);
  double z_prev = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double z = (i == n) ? length
                              : -std::log(1.0 - total * static_cast<double>(i) / n) / alpha;
    h[i - 1] = z - z_prev;
    z_prev = z;
  }
  return h;
}

/// Loss-weighted effective length of a step: (1 - e^{-alpha h}) / alpha.
inline double effective_length(double alpha_per_m, double h_m) {
  if (alpha_per_m == 0.0) return h_m;
  return (1.0 - std::exp(-alpha_per_m * h_m)) / alpha_per_m;
}

/// Frequency-domain factor exp(sign (i beta2/2 w^2 - alpha/2) h) on the
/// signal's bin grid.
inline cvec linear_factor(const DualPolSignal& s, const FiberParams& fiber, double h_m,
                          int sign) {
  const std::size_t n = s.size();
  const double beta2 = fiber.beta2_s2_m();
  const double alpha = fiber.alpha_per_m();
  const double amp = std::exp(-0.5 * sign * alpha * h_m);
  cvec factor(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 2.0 * M_PI * fft::bin_frequency(k, n, s.sample_rate);
    factor[k] = std::polar(amp, sign * 0.5 * beta2 * w * w * h_m);
  }
  return factor;
}

inline void multiply_spectrum(cvec& v, const cvec& factor) {
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= factor[k];
}

/// Kerr phase rotation exp(i sign gamma f_M (|x|^2+|y|^2) h_eff) on both
/// polarizations (Manakov form).
inline void nonlinear_rotate(DualPolSignal& s, double gamma_manakov_per_w_m, double h_eff_m,
                             int sign) {
  const double c = sign * gamma_manakov_per_w_m * h_eff_m;
  if (c == 0.0) return;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double p = std::norm(s.x[n]) + std::norm(s.y[n]);
    const cplx ph = std::polar(1.0, c * p);
    s.x[n] *= ph;
    s.y[n] *= ph;
  }
}

}  // namespace detail

/// One symmetric split step: half linear, full nonlinear at the loss-weighted
/// effective length, half linear.  sign=+1 propagates forward, sign=-1 runs
/// the inverted virtual fiber (loss becomes gain, dispersion and Kerr phases
/// negate), making a -1 step the exact inverse of a +1 step.
inline DualPolSignal ssfm_step(DualPolSignal s, const FiberParams& fiber, double h_km,
                               int sign) {
  if (h_km <= 0.0) throw ParameterError("ssfm_step: step size <= 0");
  fiber.validate();
  const double h = h_km * 1e3;
  const auto half = detail::linear_factor(s, fiber, h / 2.0, sign);
  const double h_eff = detail::effective_length(fiber.alpha_per_m(), h);
  const double g = fiber.gamma_per_w_m() * fiber.manakov_factor;

  fft::forward(s.x);
  fft::forward(s.y);
  detail::multiply_spectrum(s.x, half);
  detail::multiply_spectrum(s.y, half);
  fft::inverse(s.x);
  fft::inverse(s.y);
  detail::nonlinear_rotate(s, g, h_eff, sign);
  fft::forward(s.x);
  fft::forward(s.y);
  detail::multiply_spectrum(s.x, half);
  detail::multiply_spectrum(s.y, half);
  fft::inverse(s.x);
  fft::inverse(s.y);
  return s;
}

/// Integrate one span.  Adjacent half steps are merged (L/2 [N L]^{n-1} N L/2),
/// which composes to exactly the same operator as n symmetric steps.  With
/// sign=-1 the step sequence is traversed in reverse so the palindrome
/// property makes the backward pass the exact inverse of the forward one on
/// the same grid.
inline DualPolSignal propagate_fiber(DualPolSignal s, const FiberParams& fiber,
                                     const SsfmConfig& cfg, int sign) {
  fiber.validate();
  auto steps = detail::step_sizes(fiber, cfg);
  if (sign < 0) std::reverse(steps.begin(), steps.end());
  const double g = fiber.gamma_per_w_m() * fiber.manakov_factor;
  const std::size_t n_steps = steps.size();

  // Uniform grids reuse two cached spectral factors; non-uniform grids
  // rebuild the boundary factor as the step size changes.
  const bool uniform = cfg.step_distribution == StepDistribution::kUniform ||
                       fiber.alpha_per_m() == 0.0;
  cvec half = detail::linear_factor(s, fiber, steps.front() / 2.0, sign);
  cvec full;
  if (uniform && n_steps > 1) full = detail::linear_factor(s, fiber, steps.front(), sign);

  fft::forward(s.x);
  fft::forward(s.y);
  detail::multiply_spectrum(s.x, half);
  detail::multiply_spectrum(s.y, half);
  for (std::size_t i = 0; i < n_steps; ++i) {
    fft::inverse(s.x);
    fft::inverse(s.y);
    detail::nonlinear_rotate(s, g, detail::effective_length(fiber.alpha_per_m(), steps[i]),
                             sign);
    fft::forward(s.x);
    fft::forward(s.y);
    const bool last = (i + 1 == n_steps);
    const cvec* factor;
    cvec boundary;
    if (last) {
      if (!uniform) half = detail::linear_factor(s, fiber, steps[i] / 2.0, sign);
      factor = &half;
    } else if (uniform) {
      factor = &full;
    } else {
      boundary = detail::linear_factor(s, fiber, (steps[i] + steps[i + 1]) / 2.0, sign);
      factor = &boundary;
    }
    detail::multiply_spectrum(s.x, *factor);
    detail::multiply_spectrum(s.y, *factor);
  }
  fft::inverse(s.x);
  fft::inverse(s.y);
  return s;
}

/// One-sided ASE PSD per polarization added by the amplifier, W/Hz:
/// n_sp h nu (G - 1) with n_sp = NF G / (2 (G - 1)).
inline double ase_psd_per_pol(const AmpSpec& amp, double center_frequency) {
  const double gain = db_to_lin(amp.gain_db);
  if (gain <= 1.0 || std::isinf(amp.noise_figure_db)) return 0.0;
  const double nf = db_to_lin(amp.noise_figure_db);
  const double n_sp = nf * gain / (2.0 * (gain - 1.0));
  return n_sp * kPlanck * center_frequency * (gain - 1.0);
}

/// Flat-gain EDFA: field scaled by sqrt(G), then white circular Gaussian ASE
/// loaded per polarization across the whole simulated band.
inline DualPolSignal amplify(DualPolSignal s, const AmpSpec& amp, double center_frequency) {
  if (amp.gain_db < 0.0) throw ParameterError("amplify: gain below 0 dB");
  const double gain = db_to_lin(amp.gain_db);
  const double field = std::sqrt(gain);
  for (auto& v : s.x) v *= field;
  for (auto& v : s.y) v *= field;
  const double psd = ase_psd_per_pol(amp, center_frequency);
  if (psd > 0.0) {
    Rng rng(amp.prng_seed);
    add_white_noise(s, 2.0 * psd, rng);  // helper takes the two-pol total
  }
  return s;
}

/// Forward-propagate the whole link: per span, fiber then EDFA.  Per-span
/// noise seeds are derived from (seed, span index) so realizations are
/// independent of scheduling.
inline DualPolSignal propagate_link(DualPolSignal s, const LinkSpec& link,
                                    const SsfmConfig& cfg, std::uint64_t seed) {
  for (std::size_t j = 0; j < link.spans.size(); ++j) {
    s = propagate_fiber(std::move(s), link.spans[j].fiber, cfg, +1);
    AmpSpec amp = link.spans[j].amp;
    amp.prng_seed = seed_hash({seed, 0x617365ULL, j});  // "ase"
    s = amplify(std::move(s), amp, link.center_frequency);
  }
  return s;
}

}  // namespace splitnlc
