#pragma once

#include <span>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/fiber.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc {

/// Assignment of backpropagated spans: the transmitter pre-compensates the
/// first tx_spans physical spans, the receiver post-compensates the rest.
struct NlcPlan {
  int total_spans = 0;
  int tx_spans = 0;
  SsfmConfig ssfm;

  int rx_spans() const { return total_spans - tx_spans; }
};

/// Build a validated plan.  The 50% split convention is k = round-half-up(N/2).
inline NlcPlan plan_split(int total_spans, int tx_spans, const SsfmConfig& ssfm) {
  if (total_spans < 0 || tx_spans < 0 || tx_spans > total_spans)
    throw ParameterError("plan_split: need 0 <= k <= N");
  return NlcPlan{total_spans, tx_spans, ssfm};
}

inline int half_split_tx_spans(int total_spans) {
  return (total_spans + 1) / 2;  // round half up
}

/// Full-field digital backpropagation of a contiguous span subset: for each
/// span in reverse order, undo the amplifier gain (no noise is subtracted)
/// and run the inverted virtual fiber on the same step grid as the forward
/// channel.  Noiseless round trip: dbp(forward(x)) == x.
inline DualPolSignal dbp(DualPolSignal s, std::span<const SpanSpec> spans,
                         const SsfmConfig& cfg) {
  for (std::size_t i = spans.size(); i-- > 0;) {
    const auto& span = spans[i];
    const double inv_field = 1.0 / std::sqrt(db_to_lin(span.amp.gain_db));
    for (auto& v : s.x) v *= inv_field;
    for (auto& v : s.y) v *= inv_field;
    s = propagate_fiber(std::move(s), span.fiber, cfg, -1);
  }
  return s;
}

/// Transmitter-side DBP over the first k spans the signal will traverse.
/// The pre-distorted waveform is renormalized to the launch power it carried
/// on entry (mean-power convention).
inline DualPolSignal precompensate(DualPolSignal s, const LinkSpec& link,
                                   const NlcPlan& plan) {
  if (plan.total_spans != static_cast<int>(link.span_count()))
    throw ParameterError("precompensate: plan does not match link");
  if (plan.tx_spans == 0) return s;
  const double target_dbm = watt_to_dbm(mean_power_w(s));
  std::span<const SpanSpec> head(link.spans.data(), static_cast<std::size_t>(plan.tx_spans));
  s = dbp(std::move(s), head, plan.ssfm);
  return set_mean_power(std::move(s), target_dbm);
}

/// Receiver-side DBP over the last N-k spans.
inline DualPolSignal postcompensate(DualPolSignal s, const LinkSpec& link,
                                    const NlcPlan& plan) {
  if (plan.total_spans != static_cast<int>(link.span_count()))
    throw ParameterError("postcompensate: plan does not match link");
  if (plan.rx_spans() == 0) return s;
  std::span<const SpanSpec> tail(link.spans.data() + plan.tx_spans,
                                 static_cast<std::size_t>(plan.rx_spans()));
  return dbp(std::move(s), tail, plan.ssfm);
}

/// Electronic dispersion compensation: a single all-pass filter removing the
/// link's accumulated dispersion, exp(-i beta2_total/2 w^2).  No amplitude
/// change.
inline DualPolSignal edc(DualPolSignal s, const LinkSpec& link) {
  if (link.spans.empty()) return s;
  const double b2l = link.total_beta2_L();
  const std::size_t n = s.size();
  cvec h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 2.0 * M_PI * fft::bin_frequency(k, n, s.sample_rate);
    h[k] = std::polar(1.0, -0.5 * b2l * w * w);
  }
  apply_transfer(s, h);
  return s;
}

}  // namespace splitnlc
