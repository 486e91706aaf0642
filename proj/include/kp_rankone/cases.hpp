#pragma once

// Special cases expressed as rank-one triples: almost-intertwining matrices,
// Calogero-Moser pairs (Wilson's rational solutions) and KdV/RS pairs.

#include <cstdint>
#include <optional>
#include <string>

#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/rng.hpp"
#include "kp_rankone/tau.hpp"
#include "kp_rankone/triple.hpp"

namespace kp_rankone {

/// X: n x (N-n), Y: n x n, Z: (N-n) x (N-n) with rank(XZ - YX) <= 1.
struct IntertwiningData {
  CMatrix X;
  CMatrix Y;
  CMatrix Z;
};

/// n x n pair with rank([X, Z] + I) <= 1.
struct CalogeroMoserData {
  CMatrix X;
  CMatrix Z;
};

/// n x n pair with rank(XZ + ZX) <= 1.
struct KdVPairData {
  CMatrix X;
  CMatrix Z;
};

namespace detail {

inline void require_rank_at_most_one(const CMatrix& m, double reference, double tol, const std::string& what) {
  const int rank = numerical_rank(m, tol, reference);
  if (rank > 1) throw InadmissibleError(what + " has numerical rank " + std::to_string(rank) + " > 1");
}

inline void require_admissible(const RankOneTriple& tr, double tol, const std::string& what) {
  const auto report = validate_triple(tr, tol);
  if (!report.full_rank_ok || !report.nondegeneracy_ok)
    throw DegenerateInputError(what + ": det(A C^T) vanishes or A, C are rank deficient");
  if (!report.admissible) throw InadmissibleError(what + ": rank(A B U^T) = " + std::to_string(report.rank_of_ABUt));
}

}  // namespace detail

inline CMatrix default_intertwining_c(Eigen::Index n) {
  CMatrix c(n, 2 * n);
  c << identity(n), identity(n);
  return c;
}

/// A = [X I_n], B = diag(Z, Y). C defaults to [I_n I_n] when N = 2n.
/// Shapes are checked; the rank condition is not.
inline RankOneTriple assemble_intertwining(const IntertwiningData& d, const std::optional<CMatrix>& c = std::nullopt) {
  const Eigen::Index n = d.Y.rows();
  const Eigen::Index k = d.Z.rows();
  require_square(d.Y, "from_intertwining Y");
  require_square(d.Z, "from_intertwining Z");
  if (d.X.rows() != n || d.X.cols() != k) throw DimensionError("from_intertwining: X must be n x (N-n)");

  CMatrix a(n, k + n);
  a << d.X, identity(n);
  CMatrix b = CMatrix::Zero(k + n, k + n);
  b.topLeftCorner(k, k) = d.Z;
  b.bottomRightCorner(n, n) = d.Y;
  CMatrix cm;
  if (c) {
    cm = *c;
  } else {
    if (k != n) throw DimensionError("from_intertwining: C is required unless N = 2n");
    cm = default_intertwining_c(n);
  }
  return RankOneTriple(std::move(a), std::move(b), std::move(cm));
}

inline RankOneTriple from_intertwining(const IntertwiningData& d, const std::optional<CMatrix>& c = std::nullopt,
                                       double tol = kDefaultRankTol) {
  auto tr = assemble_intertwining(d, c);
  const double reference = spectral_norm(d.X) * (spectral_norm(d.Z) + spectral_norm(d.Y));
  detail::require_rank_at_most_one(d.X * d.Z - d.Y * d.X, reference, tol, "XZ - YX");
  detail::require_admissible(tr, tol, "from_intertwining");
  return tr;
}

/// A = [X I_n], B = [[Z, 0], [I_n, Z]], C = [I_n 0]. Then A B U^T = -([X,Z] + I)
/// and tau(t) = det(e^{g(Z)}) det(X + g'(Z)). Shapes are checked; the rank condition is not.
inline RankOneTriple assemble_calogero_moser(const CalogeroMoserData& d) {
  require_square(d.X, "from_calogero_moser X");
  require_square(d.Z, "from_calogero_moser Z");
  const Eigen::Index n = d.X.rows();
  if (d.Z.rows() != n) throw DimensionError("from_calogero_moser: X and Z must have the same size");
  CMatrix a(n, 2 * n);
  a << d.X, identity(n);
  CMatrix b = CMatrix::Zero(2 * n, 2 * n);
  b.topLeftCorner(n, n) = d.Z;
  b.bottomLeftCorner(n, n) = identity(n);
  b.bottomRightCorner(n, n) = d.Z;
  CMatrix c = CMatrix::Zero(n, 2 * n);
  c.leftCols(n) = identity(n);
  return RankOneTriple(std::move(a), std::move(b), std::move(c));
}

inline RankOneTriple from_calogero_moser(const CalogeroMoserData& d, double tol = kDefaultRankTol) {
  auto tr = assemble_calogero_moser(d);
  const Eigen::Index n = d.X.rows();
  const CMatrix comm = d.X * d.Z - d.Z * d.X + identity(n);
  detail::require_rank_at_most_one(comm, 2.0 * spectral_norm(d.X) * spectral_norm(d.Z) + 1.0, tol, "[X,Z] + I");
  if (numerical_rank(d.X, tol) != n)
    throw DegenerateInputError(
        "from_calogero_moser: det X ~ 0; translate the times (replace X by X + g'(Z) at a shifted base point)");
  detail::require_admissible(tr, tol, "from_calogero_moser");
  return tr;
}

/// Intertwining triple with Y = -Z: at odd times only, e^{g(-Z)} = e^{-g(Z)} and
/// tau = det(e^{-g(Z)}) det(e^{g(Z)} X e^{g(Z)} + I).
inline RankOneTriple from_kdv_pair(const KdVPairData& d, double tol = kDefaultRankTol) {
  require_square(d.X, "from_kdv_pair X");
  require_square(d.Z, "from_kdv_pair Z");
  if (d.Z.rows() != d.X.rows()) throw DimensionError("from_kdv_pair: X and Z must have the same size");
  detail::require_rank_at_most_one(d.X * d.Z + d.Z * d.X, 2.0 * spectral_norm(d.X) * spectral_norm(d.Z), tol,
                                   "XZ + ZX");
  return from_intertwining({d.X, -d.Z, d.Z}, std::nullopt, tol);
}

/// g'(Z) = sum_{i=1..K} i t_i Z^{i-1}, by Horner.
inline CMatrix g_prime_of(const CMatrix& z, const TimeVector& t) {
  const Eigen::Index n = z.rows();
  CMatrix acc = CMatrix::Zero(n, n);
  for (int i = t.size(); i >= 1; --i) {
    acc = z * acc;
    acc.diagonal().array() += static_cast<double>(i) * t(i);
  }
  return acc;
}

/// Wilson's formula det(X + sum_i i t_i Z^{i-1}).
inline ScaledComplex wilson_tau_closed_form(const CalogeroMoserData& d, const TimeVector& t) {
  return det_scaled(d.X + g_prime_of(d.Z, t));
}

/// Random Calogero-Moser pair: X = G diag(q) G^{-1},
/// Z = G (diag(p) + [1/(q_i - q_j)]_{i != j}) G^{-1}, so [X,Z] + I = G 1 1^T G^{-1}.
/// Positions keep |q_i| >= 0.3 and |q_i - q_j| >= 0.3 (X invertible, Z tame).
inline CalogeroMoserData random_calogero_moser(int n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("random_calogero_moser: n must be positive");
  Xoshiro256 rng(seed);
  std::vector<Complex> q;
  int guard = 0;
  while (static_cast<int>(q.size()) < n) {
    if (++guard > 10000) throw GenerationError("random_calogero_moser: could not place positions");
    const Complex cand{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    if (std::abs(cand) < 0.3) continue;
    bool ok = true;
    for (const auto& other : q) ok = ok && std::abs(cand - other) >= 0.3;
    if (ok) q.push_back(cand);
  }
  CMatrix x = CMatrix::Zero(n, n);
  CMatrix z(n, n);
  for (int i = 0; i < n; ++i) {
    x(i, i) = q[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      z(i, j) = i == j ? rng.unit_square() : 1.0 / (q[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(j)]);
  }
  CMatrix g = identity(n) + 0.5 * random_matrix(rng, n, n);
  const CMatrix g_inv = checked_inverse<GenerationError>(g, 1e-6, "random_calogero_moser: conjugator singular");
  return {g * x * g_inv, g * z * g_inv};
}

/// Random square (N = 2n) almost-intertwining data: Y = (XZ - a b^T) X^{-1},
/// redrawn until X and X + I are well conditioned.
inline IntertwiningData random_intertwining(int n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("random_intertwining: n must be positive");
  Xoshiro256 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    CMatrix x = identity(n) * rng.uniform(0.5, 1.5) + random_matrix(rng, n, n);
    const CMatrix z = random_matrix(rng, n, n);
    const CMatrix col = random_matrix(rng, n, 1);
    const CMatrix row = random_matrix(rng, n, 1);
    Eigen::PartialPivLU<CMatrix> lu_x(x);
    Eigen::PartialPivLU<CMatrix> lu_shift(x + identity(n));
    if (lu_x.rcond() < 1e-3 || lu_shift.rcond() < 1e-3) continue;
    const CMatrix rhs = x * z - col * row.transpose();
    // Y X = rhs  <=>  X^T Y^T = rhs^T
    const CMatrix y = x.transpose().partialPivLu().solve(rhs.transpose()).transpose();
    return {std::move(x), y, z};
  }
  throw GenerationError("random_intertwining: no well-conditioned draw after 100 attempts");
}

}  // namespace kp_rankone
