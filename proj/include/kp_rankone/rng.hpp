#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace kp_rankone {

/// xoshiro256** (Blackman & Vigna), seeded through splitmix64.
///
/// Only integer operations and an exact 53-bit mantissa conversion are used,
/// so a given seed yields the same draws on every platform. The standard
/// <random> distributions are not used for that reason.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in the unit square centred at the origin: re, im in [-1/2, 1/2).
  std::complex<double> unit_square() { return {uniform() - 0.5, uniform() - 0.5}; }

  /// Uniform in the annulus r_min <= |z| <= r_max (uniform in area).
  std::complex<double> annulus(double r_min, double r_max) {
    const double r = std::sqrt(uniform(r_min * r_min, r_max * r_max));
    return std::polar(r, uniform(-std::numbers::pi, std::numbers::pi));
  }

  /// Integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(next() % span);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

}  // namespace kp_rankone
