#pragma once

#include <cstdint>
#include <string>

#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/rng.hpp"

namespace kp_rankone {

/// Matrix data (A, B, C) of one KP solution: A, C are n x N, B is N x N, N > n.
///
/// Construction checks shapes and finiteness only. Whether the triple meets
/// the rank-one hypothesis is a separate question answered by validate_triple;
/// inadmissible triples are still evaluable (negative controls use them).
class RankOneTriple {
 public:
  RankOneTriple(CMatrix a, CMatrix b, CMatrix c) : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    check_shapes(a_, b_, c_);
  }

  const CMatrix& A() const { return a_; }
  const CMatrix& B() const { return b_; }
  const CMatrix& C() const { return c_; }
  int n() const { return static_cast<int>(a_.rows()); }
  int N() const { return static_cast<int>(a_.cols()); }

  static void check_shapes(const CMatrix& a, const CMatrix& b, const CMatrix& c) {
    if (a.rows() <= 0 || a.cols() <= a.rows()) {
      throw DimensionError("triple: A must be n x N with N > n >= 1, got " + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()));
    }
    if (b.rows() != a.cols() || b.cols() != a.cols()) throw DimensionError("triple: B must be N x N");
    if (c.rows() != a.rows() || c.cols() != a.cols()) throw DimensionError("triple: C must have the shape of A");
    if (!all_finite(a) || !all_finite(b) || !all_finite(c)) throw DimensionError("triple: non-finite entries");
  }

 private:
  CMatrix a_;
  CMatrix b_;
  CMatrix c_;
};

struct TripleReport {
  int rank_of_ABUt = 0;
  double second_singular_ratio = 0.0;  ///< sigma_2 / sigma_1 of A B U^T
  bool nondegeneracy_ok = false;       ///< det(A C^T) != 0 at tolerance
  bool full_rank_ok = false;           ///< rank A = rank C = n
  bool admissible = false;
};

inline TripleReport validate_triple(const CMatrix& a, const CMatrix& b, const CMatrix& c,
                                    double tol = kDefaultRankTol) {
  RankOneTriple::check_shapes(a, b, c);
  const Eigen::Index n = a.rows();
  TripleReport report;
  report.full_rank_ok = numerical_rank(a, tol) == n && numerical_rank(c, tol) == n;

  // Any basis of L^perp works: the rank of A B U^T does not depend on it.
  const CMatrix u = detail::bilinear_complement_rows(a);
  const CMatrix abut = a * b * u.transpose();
  const auto sv = singular_values(abut);
  report.rank_of_ABUt =
      numerical_rank(abut, tol, spectral_norm(a) * spectral_norm(b) * spectral_norm(u));
  report.second_singular_ratio = sv.size() >= 2 && sv[0] > 0 ? sv[1] / sv[0] : 0.0;

  const CMatrix act = a * c.transpose();
  report.nondegeneracy_ok = numerical_rank(act, tol, spectral_norm(a) * spectral_norm(c)) == n;

  report.admissible = report.rank_of_ABUt <= 1 && report.nondegeneracy_ok && report.full_rank_ok;
  return report;
}

inline TripleReport validate_triple(const RankOneTriple& tr, double tol = kDefaultRankTol) {
  return validate_triple(tr.A(), tr.B(), tr.C(), tol);
}

inline CMatrix random_matrix(Xoshiro256& rng, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.unit_square();
  return m;
}

/// Random triple satisfying the rank-one condition, reproducible from seed.
///
/// A, C, B0 have entries uniform in the centred complex unit square. B0 is
/// corrected so that A B U^T equals a random outer product a b^T:
/// B = B0 - M1 (A B0 U^T - a b^T) M2 with A M1 = I_n and M2 U^T = I_{N-n}.
/// Draws violating non-degeneracy are discarded and redrawn.
inline RankOneTriple random_admissible(int n, int big_n, std::uint64_t seed) {
  if (n < 1 || big_n <= n) {
    throw DimensionError("random_admissible: need N > n >= 1, got n=" + std::to_string(n) +
                         " N=" + std::to_string(big_n));
  }
  Xoshiro256 rng(seed);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const CMatrix a = random_matrix(rng, n, big_n);
    const CMatrix c = random_matrix(rng, n, big_n);
    const CMatrix b0 = random_matrix(rng, big_n, big_n);
    const CMatrix col = random_matrix(rng, n, 1);
    const CMatrix row = random_matrix(rng, big_n - n, 1);
    if (numerical_rank(a) != n) continue;

    const CMatrix u = detail::bilinear_complement_rows(a);
    // Any M1 with A M1 = I and M2 with M2 U^T = I make the correction exact;
    // the Moore-Penrose choices keep them well conditioned (A A^T may not be).
    const CMatrix m1 = a.completeOrthogonalDecomposition().pseudoInverse();
    const CMatrix m2 = u.transpose().completeOrthogonalDecomposition().pseudoInverse();
    const CMatrix r = a * b0 * u.transpose();
    const CMatrix b = b0 - m1 * (r - col * row.transpose()) * m2;

    if (validate_triple(a, b, c).admissible) return RankOneTriple(a, b, c);
  }
  throw GenerationError("random_admissible: no admissible draw after 100 attempts (n=" + std::to_string(n) +
                        ", N=" + std::to_string(big_n) + ")");
}

}  // namespace kp_rankone
