#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace splitnlc {

/// splitmix64 step; used both as a stream mixer and to derive child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic seed derivation: fold a tuple of identifiers into one seed.
/// Used for per-span, per-channel and per-point noise streams so that changing
/// one identifier never perturbs another stream.
inline std::uint64_t seed_hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x5e7e57a7e5eedULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

/// mt19937_64 wrapped with distribution code of our own: std::normal_distribution
/// and friends are implementation-defined, this keeps streams identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Circular complex normal with E|z|^2 = variance.
  std::complex<double> complex_gaussian(double variance) {
    const double s = std::sqrt(variance * 0.5);
    return {s * gaussian(), s * gaussian()};
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace splitnlc
