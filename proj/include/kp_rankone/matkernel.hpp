#pragma once

// Dense complex matrix kernel: determinant in scaled form, matrix exponential,
// numerical rank, bilinear-form nullspace and clustered eigenvalues.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kp_rankone/errors.hpp"
#include "kp_rankone/scaled_complex.hpp"

namespace kp_rankone {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Singular values below this fraction of the reference are treated as zero.
inline constexpr double kDefaultRankTol = 1e-9;
/// Eigenvalues closer than this (absolute) are merged into one cluster.
inline constexpr double kEigenClusterTol = 1e-7;

inline void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

/// Builds a rows x cols matrix from row-major entries, enforcing the CMatrix
/// invariants (positive dimensions, matching length, finite entries).
inline CMatrix make_matrix(Eigen::Index rows, Eigen::Index cols, std::span<const Complex> row_major) {
  if (rows <= 0 || cols <= 0) throw DimensionError("matrix dimensions must be positive");
  if (static_cast<Eigen::Index>(row_major.size()) != rows * cols) {
    throw DimensionError("matrix payload has " + std::to_string(row_major.size()) + " entries, expected " +
                         std::to_string(rows * cols));
  }
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row_major[static_cast<std::size_t>(i * cols + j)];
  if (!all_finite(m)) throw DimensionError("matrix entries must be finite");
  return m;
}

inline CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

inline double norm1(const CMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

inline std::vector<double> singular_values(const CMatrix& m) {
  if (m.size() == 0) return {};
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

inline double spectral_norm(const CMatrix& m) {
  const auto s = singular_values(m);
  return s.empty() ? 0.0 : s.front();
}

/// Number of singular values above tol * max(sigma_1, reference).
///
/// With reference = 0 this is the usual relative rank. A positive reference
/// (typically the product of the norms of the factors that formed m) keeps a
/// matrix that is zero up to roundoff from reporting full rank.
inline int numerical_rank(const CMatrix& m, double tol = kDefaultRankTol, double reference = 0.0) {
  if (!(tol > 0)) throw DimensionError("numerical_rank: tolerance must be positive");
  const auto s = singular_values(m);
  if (s.empty()) return 0;
  const double threshold = tol * std::max(s.front(), reference);
  return static_cast<int>(std::count_if(s.begin(), s.end(), [&](double v) { return v > threshold; }));
}

namespace detail {

/// Rows spanning {u : A u = 0} (plain transpose, no conjugation), no rank check.
inline CMatrix bilinear_complement_rows(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const Eigen::Index n = a.rows();
  const Eigen::Index big_n = a.cols();
  return svd.matrixV().rightCols(big_n - n).transpose();
}

}  // namespace detail

/// Basis of L^perp for L = row space of A under <x, y> = sum x_i y_i.
/// Returns U ((N-n) x N) with A U^T = 0 and independent rows.
inline CMatrix nullspace_rows(const CMatrix& a, double tol = kDefaultRankTol) {
  if (a.cols() <= a.rows()) {
    throw DimensionError("nullspace_rows: need N > n, got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  if (numerical_rank(a, tol) != a.rows()) throw DegenerateInputError("nullspace_rows: A is rank deficient");
  return detail::bilinear_complement_rows(a);
}

/// Determinant as a ScaledComplex, via full-pivot LU.
inline ScaledComplex det_scaled(const CMatrix& m) {
  require_square(m, "det_scaled");
  if (!all_finite(m)) throw RangeError("det_scaled: matrix has non-finite entries");
  Eigen::FullPivLU<CMatrix> lu(m);
  const auto& packed = lu.matrixLU();
  double log_mag = 0.0;
  double phase = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Complex d = packed(i, i);
    if (d == Complex{}) return ScaledComplex::zero();
    log_mag += std::log(std::abs(d));
    phase += std::arg(d);
  }
  const double sign = lu.permutationP().determinant() * lu.permutationQ().determinant();
  if (sign < 0) phase += std::numbers::pi;
  return ScaledComplex::from_log(log_mag, phase);
}

namespace detail {

// Pade [m/m] numerator coefficients for exp, m = 3, 5, 7, 9, 13.
inline constexpr std::array<double, 4> kPade3 = {120., 60., 12., 1.};
inline constexpr std::array<double, 6> kPade5 = {30240., 15120., 3360., 420., 30., 1.};
inline constexpr std::array<double, 8> kPade7 = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
inline constexpr std::array<double, 10> kPade9 = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                                  2162160.,     110880.,      3960.,        90.,        1.};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800., 129060195264000.,
    10559470521600.,    670442572800.,      33522128640.,      1323241920.,       40840800.,
    960960.,            16380.,             182.,              1.};

// Largest 1-norm for which each degree meets unit roundoff without scaling.
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t K>
CMatrix pade_low(const CMatrix& a, const std::array<double, K>& b) {
  const Eigen::Index n = a.rows();
  const CMatrix a2 = a * a;
  CMatrix power = identity(n);
  CMatrix u_inner = CMatrix::Zero(n, n);
  CMatrix v = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < K; k += 2) {
    v += b[k] * power;
    u_inner += b[k + 1] * power;
    power = power * a2;
  }
  const CMatrix u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

inline CMatrix pade13(const CMatrix& a) {
  const auto& b = kPade13;
  const Eigen::Index n = a.rows();
  const CMatrix id = identity(n);
  const CMatrix a2 = a * a;
  const CMatrix a4 = a2 * a2;
  const CMatrix a6 = a4 * a2;
  const CMatrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const CMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with Pade approximants
/// (Higham 2005). Works for defective matrices; no diagonalization.
inline CMatrix matexp(const CMatrix& m) {
  require_square(m, "matexp");
  if (!all_finite(m)) throw RangeError("matexp: matrix has non-finite entries");
  const double norm = norm1(m);
  if (norm <= detail::kTheta3) return detail::pade_low(m, detail::kPade3);
  if (norm <= detail::kTheta5) return detail::pade_low(m, detail::kPade5);
  if (norm <= detail::kTheta7) return detail::pade_low(m, detail::kPade7);
  if (norm <= detail::kTheta9) return detail::pade_low(m, detail::kPade9);
  int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / detail::kTheta13))));
  CMatrix e = detail::pade13(m / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) e = e * e;
  if (!all_finite(e)) throw RangeError("matexp: result overflows double range");
  return e;
}

struct Eigenvalue {
  Complex value;
  int multiplicity;
};

/// Eigenvalues with algebraic multiplicities. Computed eigenvalues within
/// cluster_tol of each other (transitively) are merged; the cluster mean is
/// reported. Output is sorted by (real, imag).
inline std::vector<Eigenvalue> eig(const CMatrix& m, double cluster_tol = kEigenClusterTol) {
  require_square(m, "eig");
  Eigen::ComplexEigenSolver<CMatrix> solver(m, false);
  if (solver.info() != Eigen::Success) throw Error("eig: eigenvalue iteration did not converge");
  const auto& raw = solver.eigenvalues();
  const auto count = static_cast<std::size_t>(raw.size());

  std::vector<std::size_t> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j)
      if (std::abs(raw[static_cast<Eigen::Index>(i)] - raw[static_cast<Eigen::Index>(j)]) <= cluster_tol)
        parent[find(i)] = find(j);

  std::vector<Eigenvalue> out;
  std::vector<std::size_t> root_of_out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = find(i);
    auto it = std::find(root_of_out.begin(), root_of_out.end(), r);
    if (it == root_of_out.end()) {
      root_of_out.push_back(r);
      out.push_back({raw[static_cast<Eigen::Index>(i)], 1});
    } else {
      auto& e = out[static_cast<std::size_t>(it - root_of_out.begin())];
      e.value += raw[static_cast<Eigen::Index>(i)];
      ++e.multiplicity;
    }
  }
  for (auto& e : out) e.value /= static_cast<double>(e.multiplicity);
  std::sort(out.begin(), out.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return out;
}

/// Plain eigenvalues (unclustered, unsorted) for callers that pair them up.
inline CVector eigenvalues(const CMatrix& m) {
  require_square(m, "eigenvalues");
  Eigen::ComplexEigenSolver<CMatrix> solver(m, false);
  if (solver.info() != Eigen::Success) throw Error("eigenvalues: iteration did not converge");
  return solver.eigenvalues();
}

/// Right inverse R of a full-row-rank A (A R = I) built from the plain
/// transpose: R = A^T (A A^T)^{-1}.
inline CMatrix right_inverse(const CMatrix& a) {
  const CMatrix gram = a * a.transpose();
  Eigen::FullPivLU<CMatrix> lu(gram);
  if (!lu.isInvertible()) throw DegenerateInputError("right_inverse: A A^T is singular");
  return a.transpose() * lu.inverse();
}

/// LU-backed inverse that reports singularity through the caller's error type.
template <class ErrorType>
CMatrix checked_inverse(const CMatrix& m, double rcond_floor, const std::string& message) {
  Eigen::PartialPivLU<CMatrix> lu(m);
  if (!(lu.rcond() > rcond_floor)) throw ErrorType(message);
  return lu.inverse();
}

}  // namespace kp_rankone
