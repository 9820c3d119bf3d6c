#pragma once

#include <cstdint>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/qam.hpp"
#include "splitnlc/rng.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc {

/// Per-channel modulation and framing parameters.
struct ModulationSpec {
  int qam_order = 64;
  double symbol_rate = 49.5e9;      // Hz
  double roll_off = 0.01;
  int payload_symbols = 32768;      // includes the periodic pilots
  int pilot_preamble_len = 1024;
  int pilot_rate_inverse = 32;      // one payload pilot every this many symbols
  std::uint64_t prng_seed = 1;

  void validate() const {
    if (!detail::is_square_qam(qam_order))
      throw ParameterError("ModulationSpec: qam_order must be 4/16/64/256");
    if (symbol_rate <= 0.0) throw ParameterError("ModulationSpec: symbol_rate <= 0");
    if (roll_off < 0.0 || roll_off > 1.0) throw ParameterError("ModulationSpec: roll_off");
    if (pilot_preamble_len <= 0 || pilot_rate_inverse <= 0 || payload_symbols <= 0)
      throw ParameterError("ModulationSpec: non-positive frame dimension");
    if (payload_symbols % pilot_rate_inverse != 0)
      throw ParameterError("ModulationSpec: payload not divisible by pilot rate");
  }

  int frame_symbols() const { return pilot_preamble_len + payload_symbols; }
  int bits_per_symbol() const { return detail::ilog2(qam_order); }
};

/// One framed dual-polarization symbol block: a known QPSK preamble, then
/// payload with a known QPSK pilot every pilot_rate_inverse symbols and
/// PRNG-drawn QAM data elsewhere.  Symbol sequences are normalized to unit
/// mean energy per polarization.
struct TxFrame {
  cvec symbols_x;
  cvec symbols_y;
  std::vector<std::uint8_t> pilot_mask;  // 1 at preamble and pilot positions
  std::vector<std::uint8_t> bits_x;      // data bits carried on each polarization
  std::vector<std::uint8_t> bits_y;

  std::size_t size() const { return symbols_x.size(); }

  std::vector<std::size_t> pilot_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pilot_mask.size(); ++i)
      if (pilot_mask[i]) idx.push_back(i);
    return idx;
  }

  std::size_t data_symbol_count() const {
    std::size_t c = 0;
    for (auto m : pilot_mask) c += (m == 0);
    return c;
  }
};

namespace detail {

inline cplx qpsk_point(Rng& rng) {
  static const double s = 1.0 / std::sqrt(2.0);
  const auto q = rng.below(4);
  return cplx{(q & 1u) ? s : -s, (q & 2u) ? s : -s};
}

inline void normalize_unit_energy(cvec& v) {
  double e = 0.0;
  for (const auto& z : v) e += std::norm(z);
  const double scale = std::sqrt(static_cast<double>(v.size()) / e);
  for (auto& z : v) z *= scale;
}

}  // namespace detail

/// Deterministically build a frame from the spec and its seed.
inline TxFrame build_frame(const ModulationSpec& mod) {
  mod.validate();
  const int total = mod.frame_symbols();
  TxFrame f;
  f.symbols_x.resize(total);
  f.symbols_y.resize(total);
  f.pilot_mask.assign(total, 0);

  Rng pilot_rng(seed_hash({mod.prng_seed, 0x70696c6f74ULL}));  // "pilot"
  for (int i = 0; i < mod.pilot_preamble_len; ++i) {
    f.pilot_mask[i] = 1;
    f.symbols_x[i] = detail::qpsk_point(pilot_rng);
    f.symbols_y[i] = detail::qpsk_point(pilot_rng);
  }
  for (int j = 0; j < mod.payload_symbols; j += mod.pilot_rate_inverse) {
    const int i = mod.pilot_preamble_len + j;
    f.pilot_mask[i] = 1;
    f.symbols_x[i] = detail::qpsk_point(pilot_rng);
    f.symbols_y[i] = detail::qpsk_point(pilot_rng);
  }

  const int data_count = static_cast<int>(total - mod.pilot_preamble_len -
                                          mod.payload_symbols / mod.pilot_rate_inverse);
  const int bps = mod.bits_per_symbol();
  Rng data_rng(seed_hash({mod.prng_seed, 0x64617461ULL}));  // "data"
  auto draw_bits = [&](std::size_t n) {
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(data_rng.below(2));
    return b;
  };
  f.bits_x = draw_bits(static_cast<std::size_t>(data_count) * bps);
  f.bits_y = draw_bits(static_cast<std::size_t>(data_count) * bps);
  const cvec dx = map_qam(f.bits_x, mod.qam_order);
  const cvec dy = map_qam(f.bits_y, mod.qam_order);

  std::size_t d = 0;
  for (int i = mod.pilot_preamble_len; i < total; ++i) {
    if (f.pilot_mask[i]) continue;
    f.symbols_x[i] = dx[d];
    f.symbols_y[i] = dy[d];
    ++d;
  }

  detail::normalize_unit_energy(f.symbols_x);
  detail::normalize_unit_energy(f.symbols_y);
  return f;
}

}  // namespace splitnlc
