#pragma once

// Baker-Akhiezer functions of rank-one tau-functions and the pole structure
// placing the solution in the rational Grassmannian.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/scaled_complex.hpp"
#include "kp_rankone/tau.hpp"
#include "kp_rankone/triple.hpp"
#include "kp_rankone/verify.hpp"

namespace kp_rankone {

struct BASample {
  Complex x;            ///< t_1 (or x for the stationary function)
  Complex z;
  ScaledComplex value;  ///< psi itself
  Complex reduced;      ///< psi e^{-g(z)} (psi* e^{g(z)} for the dual)
  bool pole = false;  ///< set by grid samplers that catch PoleError
};

/// psi(x, z) = det(A e^{xB} (z - B) C^T) / (z^n det(A e^{xB} C^T)) e^{xz}.
/// The power z^n (n = rows of A) makes psi e^{-xz} -> 1 as z -> infinity.
inline BASample psi_stationary(const RankOneTriple& tr, Complex x, Complex z) {
  if (z == Complex{}) throw DimensionError("psi_stationary: z must be nonzero");
  const CMatrix e = matexp(x * tr.B());
  const CMatrix left = tr.A() * e;
  const Eigen::Index big_n = tr.N();
  const auto denominator = checked_det(left * tr.C().transpose());
  if (denominator.is_zero()) throw PoleError("psi_stationary: det(A e^{xB} C^T) = 0");
  BASample s{x, z, {}, {}, false};
  const auto numerator = checked_det(left * (z * identity(big_n) - tr.B()) * tr.C().transpose());
  const auto ratio = numerator / (ScaledComplex::from(z).pow(tr.n()) * denominator);
  s.reduced = ratio.value();
  s.value = ratio * ScaledComplex::exp(x * z);
  return s;
}

/// psi(t, z) = tau(t - [z^{-1}]) / tau(t) e^{g(z)}.
inline BASample psi_time(const RankOneTriple& tr, const TimeVector& t, Complex z) {
  if (z == Complex{}) throw DimensionError("psi_time: z must be nonzero");
  const auto base = tau(tr, t);
  if (base.is_zero()) throw PoleError("psi_time: tau(t) = 0");
  const auto ratio = tau_miwa(tr, t, {{z, 1}}) / base;
  return {t(1), z, ratio * ScaledComplex::exp(t.g(z)), ratio.value(), false};
}

/// psi*(t, z) = tau(t + [z^{-1}]) / tau(t) e^{-g(z)}; singular at eigenvalues of B.
inline BASample psi_dual(const RankOneTriple& tr, const TimeVector& t, Complex z) {
  if (z == Complex{}) throw DimensionError("psi_dual: z must be nonzero");
  const auto base = tau(tr, t);
  if (base.is_zero()) throw PoleError("psi_dual: tau(t) = 0");
  const auto ratio = tau_miwa(tr, t, {{z, -1}}) / base;
  return {t(1), z, ratio * ScaledComplex::exp(-t.g(z)), ratio.value(), false};
}

/// Eigenvalues of B with algebraic multiplicities; p(z) = det(z - B).
struct SpectralSupport {
  std::vector<Eigenvalue> points;
  int char_poly_degree = 0;
};

inline SpectralSupport grassmann_support(const RankOneTriple& tr) { return {eig(tr.B()), tr.N()}; }

namespace detail {

/// p(z) tau(t + [z^{-1}]) / tau(t), which is a polynomial of degree N when the
/// dual wave function has its poles only at spec(B).
inline Complex dual_numerator(const RankOneTriple& tr, const TimeVector& t, const ScaledComplex& base, Complex z) {
  const Eigen::Index big_n = tr.N();
  const auto p = det_scaled(z * identity(big_n) - tr.B());
  return (p * tau_miwa(tr, t, {{z, -1}}) / base).value();
}

}  // namespace detail

struct PolynomialityOptions {
  /// Radius is 2 + max|eig(B)| times this factor.
  double radius_factor = 1.0;
  double tolerance = kHbdeTolerance;
};

/// Interpolates q(z) = det(z - B) tau(t + [z^{-1}]) / tau(t) by a degree-N
/// polynomial at N+1 roots of unity on a circle enclosing spec(B), then
/// measures the misfit at 2N interlaced nodes on the same circle. The
/// residual is max |fit - q| / max |q| over the validation nodes.
inline VerificationReport polynomiality_check(const RankOneTriple& tr, const TimeVector& t,
                                              PolynomialityOptions options = {}) {
  const auto base = tau(tr, t);
  if (base.is_zero()) throw PoleError("polynomiality_check: tau(t) = 0");
  const int big_n = tr.N();
  const CVector spectrum = eigenvalues(tr.B());
  double spectral_radius = 0.0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) spectral_radius = std::max(spectral_radius, std::abs(spectrum[i]));

  auto too_close = [&](Complex z, double radius) {
    for (Eigen::Index i = 0; i < spectrum.size(); ++i)
      if (std::abs(z - spectrum[i]) < 1e-3 * radius) return true;
    return false;
  };

  double radius = (2.0 + spectral_radius) * options.radius_factor;
  const int fit_count = big_n + 1;
  const int check_count = 2 * big_n;
  auto node = [](double r, double angle) { return std::polar(r, angle); };
  for (int attempt = 0; attempt < 5; ++attempt, radius *= 1.25) {
    bool collision = false;
    for (int k = 0; k < fit_count && !collision; ++k)
      collision = too_close(node(radius, 2 * std::numbers::pi * k / fit_count), radius);
    for (int k = 0; k < check_count && !collision; ++k)
      collision = too_close(node(radius, std::numbers::pi * (2 * k + 1) / check_count), radius);
    if (collision) continue;

    // Coefficients of q(R w) in w by the discrete Fourier transform on roots of unity.
    std::vector<Complex> samples(static_cast<std::size_t>(fit_count));
    for (int k = 0; k < fit_count; ++k)
      samples[static_cast<std::size_t>(k)] =
          detail::dual_numerator(tr, t, base, node(radius, 2 * std::numbers::pi * k / fit_count));
    std::vector<Complex> coeffs(static_cast<std::size_t>(fit_count));
    for (int j = 0; j < fit_count; ++j) {
      Complex acc{};
      for (int k = 0; k < fit_count; ++k)
        acc += samples[static_cast<std::size_t>(k)] * std::polar(1.0, -2 * std::numbers::pi * j * k / fit_count);
      coeffs[static_cast<std::size_t>(j)] = acc / static_cast<double>(fit_count);
    }

    double misfit = 0.0;
    double magnitude = 0.0;
    for (int k = 0; k < check_count; ++k) {
      const double angle = std::numbers::pi * (2 * k + 1) / check_count;
      const Complex w = std::polar(1.0, angle);
      Complex fit{};
      for (int j = fit_count - 1; j >= 0; --j) fit = fit * w + coeffs[static_cast<std::size_t>(j)];
      const Complex exact = detail::dual_numerator(tr, t, base, node(radius, angle));
      misfit = std::max(misfit, std::abs(fit - exact));
      magnitude = std::max(magnitude, std::abs(exact));
    }
    const double residual = magnitude > 0 ? misfit / magnitude : 0.0;
    return make_report("polynomiality", residual, options.tolerance,
                       {{"radius", radius}, {"degree", big_n}, {"nodes", fit_count}, {"validation_nodes", check_count}});
  }
  throw GeometryError("polynomiality_check: interpolation circle collides with spec(B) after 5 radii");
}

}  // namespace kp_rankone
