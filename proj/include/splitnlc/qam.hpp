#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc {

namespace detail {

inline bool is_square_qam(int order) {
  return order == 4 || order == 16 || order == 64 || order == 256;
}

inline int ilog2(int v) {
  int b = 0;
  while ((1 << b) < v) ++b;
  return b;
}

/// Gray code -> binary index.
inline unsigned gray_decode(unsigned g) {
  unsigned b = 0;
  for (; g; g >>= 1) b ^= g;
  return b;
}

inline unsigned gray_encode(unsigned b) { return b ^ (b >> 1); }

}  // namespace detail

/// Per-axis amplitude levels of a square QAM, normalized to unit average
/// constellation energy (e.g. 64QAM: {+-1,+-3,+-5,+-7}/sqrt(42)).
inline std::vector<double> qam_levels(int order) {
  if (!detail::is_square_qam(order)) throw ParameterError("qam: order must be 4/16/64/256");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  std::vector<double> lv(side);
  double e2 = 0.0;
  for (int i = 0; i < side; ++i) {
    lv[i] = static_cast<double>(2 * i - (side - 1));
    e2 += lv[i] * lv[i];
  }
  const double scale = 1.0 / std::sqrt(2.0 * e2 / side);  // I and Q contribute equally
  for (double& v : lv) v *= scale;
  return lv;
}

/// Gray-map a bit stream onto square QAM symbols with unit average energy.
/// The first half of each symbol's bits select the I level, the second half
/// the Q level, each through a per-axis Gray code.
inline cvec map_qam(const std::vector<std::uint8_t>& bits, int order) {
  const int bps = detail::ilog2(order);
  if (bits.size() % bps != 0) throw ParameterError("map_qam: bit count not divisible by bits/symbol");
  const auto levels = qam_levels(order);
  const int half = bps / 2;
  cvec out(bits.size() / bps);
  for (std::size_t s = 0; s < out.size(); ++s) {
    unsigned gi = 0, gq = 0;
    for (int b = 0; b < half; ++b) gi = (gi << 1) | bits[s * bps + b];
    for (int b = 0; b < half; ++b) gq = (gq << 1) | bits[s * bps + half + b];
    out[s] = cplx{levels[detail::gray_decode(gi)], levels[detail::gray_decode(gq)]};
  }
  return out;
}

/// Hard-decision inverse of map_qam.
inline std::vector<std::uint8_t> demap_qam(const cvec& symbols, int order) {
  const auto levels = qam_levels(order);
  const int side = static_cast<int>(levels.size());
  const int half = detail::ilog2(order) / 2;
  auto nearest = [&](double v) {
    int best = 0;
    double dmin = std::abs(v - levels[0]);
    for (int i = 1; i < side; ++i) {
      const double d = std::abs(v - levels[i]);
      if (d < dmin) { dmin = d; best = i; }
    }
    return static_cast<unsigned>(best);
  };
  std::vector<std::uint8_t> bits;
  bits.reserve(symbols.size() * 2 * half);
  for (const auto& s : symbols) {
    const unsigned gi = detail::gray_encode(nearest(s.real()));
    const unsigned gq = detail::gray_encode(nearest(s.imag()));
    for (int b = half - 1; b >= 0; --b) bits.push_back((gi >> b) & 1u);
    for (int b = half - 1; b >= 0; --b) bits.push_back((gq >> b) & 1u);
  }
  return bits;
}

}  // namespace splitnlc
