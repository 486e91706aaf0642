#pragma once

// Small triples with known closed forms and random parameter draws shared by
// several test files.

#include <array>
#include <vector>

#include "oracles.hpp"

namespace kp_rankone::fixture {

using oracle::mat;

/// A = [1 1], B = diag(k, 0), C = [1 1]: tau = e^{theta} + 1, theta = sum t_i k^i.
inline RankOneTriple one_soliton(double k = 1.0) {
  return RankOneTriple(mat({{1, 1}}), mat({{k, 0}, {0, 0}}), mat({{1, 1}}));
}

/// X = [3], Z = [0]: tau = 3 + t1.
inline RankOneTriple wilson_scalar() { return from_calogero_moser({mat({{3}}), mat({{0}})}); }

inline RankOneTriple zero_b() { return RankOneTriple(mat({{1, 2, 0}}), CMatrix::Zero(3, 3), mat({{1, 0, 1}})); }

inline TimeVector random_times(Xoshiro256& rng, int k, double radius) {
  std::vector<Complex> v(static_cast<std::size_t>(k));
  for (auto& x : v) x = 2.0 * radius * rng.unit_square();
  return TimeVector(v);
}

inline std::array<Complex, 3> lattice_parameters(Xoshiro256& rng, const CMatrix& b) {
  return draw_lattice_parameters(rng, b);
}

}  // namespace kp_rankone::fixture
