#pragma once

// Residuals of the identities satisfied by rank-one tau-functions. Every
// residual is relative to the largest term contributing to it.

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "json.hpp"
#include "kp_rankone/cases.hpp"
#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/rng.hpp"
#include "kp_rankone/scaled_complex.hpp"
#include "kp_rankone/tau.hpp"
#include "kp_rankone/triple.hpp"

namespace kp_rankone {

inline constexpr double kHbdeTolerance = 1e-8;
inline constexpr double kKpTolerance = 1e-4;
inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kBetheTolerance = 1e-8;

struct VerificationReport {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  nlohmann::ordered_json context = nlohmann::ordered_json::object();
};

inline VerificationReport make_report(std::string name, double residual, double tolerance,
                                      nlohmann::ordered_json context = nlohmann::ordered_json::object()) {
  VerificationReport r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.pass = residual >= 0 && residual <= tolerance;
  r.context = std::move(context);
  return r;
}

inline nlohmann::ordered_json complex_json(Complex z) { return nlohmann::ordered_json::array({z.real(), z.imag()}); }

inline nlohmann::ordered_json scaled_json(const ScaledComplex& s) {
  return {{"log_magnitude", s.is_zero() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(s.log_magnitude())},
          {"phase", s.phase()}};
}

/// Residual of
///   (c2-c3) tau_{l+1}^{m,n} tau_l^{m+1,n+1} - (c1-c3) tau_l^{m+1,n} tau_{l+1}^{m,n+1}
///     + (c1-c2) tau_l^{m,n+1} tau_{l+1}^{m+1,n} = 0
/// with tau_l^{m,n} = tau(t - l[c1^{-1}] - m[c2^{-1}] - n[c3^{-1}]) evaluated exactly.
inline VerificationReport hbde_residual(const RankOneTriple& tr, const TimeVector& t, Complex c1, Complex c2,
                                        Complex c3, int l, int m, int n_idx, double tolerance = kHbdeTolerance) {
  if (c1 == c2 || c1 == c3 || c2 == c3) throw DimensionError("hbde_residual: c1, c2, c3 must be distinct");
  if (c1 == Complex{} || c2 == Complex{} || c3 == Complex{}) throw DimensionError("hbde_residual: c_i must be nonzero");
  auto lattice = [&](int dl, int dm, int dn) {
    return tau_miwa(tr, t, {{c1, l + dl}, {c2, m + dm}, {c3, n_idx + dn}});
  };
  const std::array<ScaledComplex, 3> terms = {
      ScaledComplex::from(c2 - c3) * lattice(1, 0, 0) * lattice(0, 1, 1),
      ScaledComplex::from(-(c1 - c3)) * lattice(0, 1, 0) * lattice(1, 0, 1),
      ScaledComplex::from(c1 - c2) * lattice(0, 0, 1) * lattice(1, 1, 0),
  };
  const auto sum = normalized_sum(terms);
  if (!(sum.scale > std::log(1e-300))) throw IndeterminateScaleError("hbde_residual: all terms underflow");
  const double residual = std::abs(sum.normalized) / sum.max_term;
  return make_report("hbde", residual, tolerance,
                     {{"c1", complex_json(c1)},
                      {"c2", complex_json(c2)},
                      {"c3", complex_json(c3)},
                      {"l", l},
                      {"m", m},
                      {"n", n_idx},
                      {"log_scale", sum.scale}});
}

/// Three lattice parameters in the annulus r_min <= |c| <= r_max, pairwise at
/// least `gap` apart and at least `gap` from every eigenvalue of b.
inline std::array<Complex, 3> draw_lattice_parameters(Xoshiro256& rng, const CMatrix& b, double r_min = 1.0,
                                                      double r_max = 3.0, double gap = 0.3) {
  const CVector spectrum = eigenvalues(b);
  std::array<Complex, 3> c{};
  int placed = 0;
  for (int attempt = 0; placed < 3; ++attempt) {
    if (attempt > 100000) throw GenerationError("draw_lattice_parameters: annulus is covered by spec(B)");
    const Complex candidate = rng.annulus(r_min, r_max);
    bool ok = true;
    for (Eigen::Index j = 0; j < spectrum.size(); ++j) ok = ok && std::abs(candidate - spectrum[j]) >= gap;
    for (int j = 0; j < placed; ++j) ok = ok && std::abs(candidate - c[static_cast<std::size_t>(j)]) >= gap;
    if (ok) c[static_cast<std::size_t>(placed++)] = candidate;
  }
  return c;
}

/// Log-derivatives F_{...} = d/dt... log tau entering the first KP equation.
struct KpDerivatives {
  Complex f11, f1111, f13, f22;
};

inline KpDerivatives kp_derivatives(const RankOneTriple& tr, const TimeVector& t, DerivativeOptions options = {}) {
  return {log_tau_derivative(tr, t, {2, 0, 0}, options), log_tau_derivative(tr, t, {4, 0, 0}, options),
          log_tau_derivative(tr, t, {1, 0, 1}, options), log_tau_derivative(tr, t, {0, 2, 0}, options)};
}

/// Residual of (D1^4 - 4 D1 D3 + 3 D2^2) tau.tau = 0, divided by tau^2:
/// 2 F_1111 + 12 F_11^2 - 8 F_13 + 6 F_22, relative to its largest term.
inline VerificationReport kp_residual(const RankOneTriple& tr, const TimeVector& t, double tolerance = kKpTolerance,
                                      DerivativeOptions options = {}) {
  const auto f = kp_derivatives(tr, t, options);
  const std::array<Complex, 4> terms = {2.0 * f.f1111, 12.0 * f.f11 * f.f11, -8.0 * f.f13, 6.0 * f.f22};
  Complex sum{};
  double scale = 0.0;
  for (const auto& term : terms) {
    sum += term;
    scale = std::max(scale, std::abs(term));
  }
  const double residual = scale > 0 ? std::abs(sum) / scale : 0.0;
  return make_report("kp", residual, tolerance,
                     {{"F11", complex_json(f.f11)},
                      {"F1111", complex_json(f.f1111)},
                      {"F13", complex_json(f.f13)},
                      {"F22", complex_json(f.f22)},
                      {"scale", scale}});
}

/// Both combinations of h1(c) = det(c - P), h2(a, b) = det((a - P)(b - P) + Q).
struct H3Values {
  Complex printed;   ///< h1(c1)h2(c2,c3) - h1(c2)h2(c1,c3) + h1(c3)h2(c1,c2)
  Complex weighted;  ///< same with weights (c2-c3), -(c1-c3), (c1-c2)
  double weighted_scale;
  double printed_scale;
};

inline H3Values h3_values(const CMatrix& p, const CMatrix& q, Complex c1, Complex c2, Complex c3) {
  require_square(p, "h3 P");
  require_square(q, "h3 Q");
  if (p.rows() != q.rows()) throw DimensionError("h3: P and Q must have the same size");
  const CMatrix id = identity(p.rows());
  // Plain determinants: the h's are polynomials of moderate size and small
  // integer inputs must give exact results.
  auto h1 = [&](Complex c) { return CMatrix(c * id - p).fullPivLu().determinant(); };
  auto h2 = [&](Complex a, Complex b) { return CMatrix((a * id - p) * (b * id - p) + q).fullPivLu().determinant(); };
  const std::array<Complex, 3> base = {h1(c1) * h2(c2, c3), -h1(c2) * h2(c1, c3), h1(c3) * h2(c1, c2)};
  const std::array<Complex, 3> weights = {c2 - c3, c1 - c3, c1 - c2};
  H3Values v{};
  v.weighted_scale = 0.0;
  v.printed_scale = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    v.printed += base[i];
    v.weighted += weights[i] * base[i];
    v.printed_scale = std::max(v.printed_scale, std::abs(base[i]));
    v.weighted_scale = std::max(v.weighted_scale, std::abs(weights[i] * base[i]));
  }
  return v;
}

/// Reports the (c_i - c_j)-weighted three-term identity, which is the form
/// the HBDE reduces to; the unweighted combination is kept in the context.
inline VerificationReport h3_residual(const CMatrix& p, const CMatrix& q, Complex c1, Complex c2, Complex c3,
                                      double tolerance = kIdentityTolerance) {
  const auto v = h3_values(p, q, c1, c2, c3);
  const double residual = v.weighted_scale > 0 ? std::abs(v.weighted) / v.weighted_scale : 0.0;
  return make_report("h3", residual, tolerance,
                     {{"weighted", complex_json(v.weighted)},
                      {"printed", complex_json(v.printed)},
                      {"printed_relative", v.printed_scale > 0 ? std::abs(v.printed) / v.printed_scale : 0.0},
                      {"rank_Q", numerical_rank(q)}});
}

/// X(m) = -eta X (lambda1 - Z) - m eta (lambda2 - Z)^{-1} (lambda1 - Z).
inline CMatrix bethe_matrix(const CalogeroMoserData& d, Complex eta, Complex lambda1, Complex lambda2, int m) {
  const CMatrix id = identity(d.X.rows());
  const CMatrix l1 = lambda1 * id - d.Z;
  const CMatrix l2_inv =
      checked_inverse<DegenerateInputError>(lambda2 * id - d.Z, 1e-13, "bethe: lambda2 is an eigenvalue of Z");
  return -eta * d.X * l1 - static_cast<double>(m) * eta * l2_inv * l1;
}

/// Checks the rational nested Bethe ansatz equations on the eigenvalues of
/// X(m-1), X(m), X(m+1): for every j the product over k equals -1.
inline VerificationReport bethe_check(const CalogeroMoserData& d, Complex eta, Complex lambda1, Complex lambda2, int m,
                                      double tolerance = kBetheTolerance) {
  if (eta == Complex{}) throw DimensionError("bethe_check: eta must be nonzero");
  require_square(d.X, "bethe X");
  if (d.Z.rows() != d.X.rows() || d.Z.cols() != d.X.cols()) throw DimensionError("bethe_check: X, Z size mismatch");

  const CVector prev = eigenvalues(bethe_matrix(d, eta, lambda1, lambda2, m - 1));
  const CVector cur = eigenvalues(bethe_matrix(d, eta, lambda1, lambda2, m));
  const CVector next = eigenvalues(bethe_matrix(d, eta, lambda1, lambda2, m + 1));
  const Eigen::Index n = cur.size();

  double scale = std::max(1.0, std::abs(eta));
  for (Eigen::Index i = 0; i < n; ++i)
    scale = std::max({scale, std::abs(prev[i]), std::abs(cur[i]), std::abs(next[i])});
  const double floor = 1e-12 * scale;

  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Complex product{1.0, 0.0};
    for (Eigen::Index k = 0; k < n; ++k) {
      const Complex d1 = cur[j] - prev[k] + eta;
      const Complex d2 = cur[j] - cur[k] - eta;
      const Complex d3 = cur[j] - next[k];
      if (std::abs(d1) < floor || std::abs(d2) < floor || std::abs(d3) < floor)
        throw DegenerateSpectrumError("bethe_check: vanishing denominator; choose new (eta, lambda1, lambda2)");
      product *= (cur[j] - prev[k]) * (cur[j] - cur[k] + eta) * (cur[j] - next[k] - eta) / (d1 * d2 * d3);
    }
    worst = std::max(worst, std::abs(product + 1.0));
  }
  return make_report("bethe", worst, tolerance,
                     {{"eta", complex_json(eta)},
                      {"lambda1", complex_json(lambda1)},
                      {"lambda2", complex_json(lambda2)},
                      {"m", m},
                      {"n", n}});
}

/// tau of the Calogero-Moser triple against det(e^{g(Z)}) det(X + g'(Z)).
inline VerificationReport crosscheck_wilson(const CalogeroMoserData& d, const TimeVector& t,
                                            double tolerance = kIdentityTolerance) {
  const auto general = tau(from_calogero_moser(d), t);
  const auto closed = det_scaled(matexp(g_of(d.Z, t))) * wilson_tau_closed_form(d, t);
  return make_report("crosscheck_wilson", relative_difference(general, closed), tolerance,
                     {{"general", scaled_json(general)}, {"closed_form", scaled_json(closed)}});
}

/// tau of the intertwining triple (C = [I I]) against det(X e^{g(Z)} + e^{g(Y)}).
inline VerificationReport crosscheck_intertwining(const IntertwiningData& d, const TimeVector& t,
                                                  double tolerance = kIdentityTolerance) {
  if (d.X.rows() != d.X.cols()) throw DimensionError("crosscheck_intertwining: needs N = 2n (square X)");
  const auto general = tau(from_intertwining(d), t);
  const auto closed = det_scaled(d.X * matexp(g_of(d.Z, t)) + matexp(g_of(d.Y, t)));
  return make_report("crosscheck_intertwining", relative_difference(general, closed), tolerance,
                     {{"general", scaled_json(general)}, {"closed_form", scaled_json(closed)}});
}

}  // namespace kp_rankone
