#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>

namespace kp_rankone {

using Complex = std::complex<double>;

/// Complex number stored as (log|value|, arg value).
///
/// Determinants of A exp(g(B)) C^T grow like exp of the times, so tau values
/// routinely leave the double range. Products and quotients stay exact in
/// this representation; sums go through normalized_sum().
class ScaledComplex {
 public:
  ScaledComplex() = default;

  /// Builds from log-magnitude and an arbitrary phase (reduced to (-pi, pi]).
  static ScaledComplex from_log(double log_magnitude, double phase) {
    ScaledComplex s;
    s.log_magnitude_ = log_magnitude;
    s.phase_ = std::isinf(log_magnitude) && log_magnitude < 0 ? 0.0 : reduce_phase(phase);
    return s;
  }

  static ScaledComplex from(Complex value) {
    if (value == Complex{}) return zero();
    return from_log(std::log(std::abs(value)), std::arg(value));
  }

  static ScaledComplex zero() { return ScaledComplex{}; }
  static ScaledComplex one() { return from_log(0.0, 0.0); }

  /// exp(w) for complex w, without forming the possibly overflowing value.
  static ScaledComplex exp(Complex w) { return from_log(w.real(), w.imag()); }

  double log_magnitude() const { return log_magnitude_; }
  double phase() const { return phase_; }
  bool is_zero() const { return std::isinf(log_magnitude_) && log_magnitude_ < 0; }
  bool is_finite() const { return std::isfinite(log_magnitude_) || is_zero(); }

  /// Plain complex value; overflows to inf for log_magnitude > ~709.
  Complex value() const {
    if (is_zero()) return {};
    return std::polar(std::exp(log_magnitude_), phase_);
  }

  /// this / reference as a plain complex; reference must be nonzero.
  Complex ratio(const ScaledComplex& reference) const { return (*this / reference).value(); }

  ScaledComplex pow(int k) const {
    if (is_zero()) return k == 0 ? one() : zero();
    return from_log(k * log_magnitude_, k * phase_);
  }

  friend ScaledComplex operator*(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return from_log(a.log_magnitude_ + b.log_magnitude_, a.phase_ + b.phase_);
  }

  friend ScaledComplex operator/(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero()) return zero();
    return from_log(a.log_magnitude_ - b.log_magnitude_, a.phase_ - b.phase_);
  }

  ScaledComplex& operator*=(const ScaledComplex& other) { return *this = *this * other; }
  ScaledComplex& operator/=(const ScaledComplex& other) { return *this = *this / other; }

 private:
  static double reduce_phase(double phase) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(phase, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
  }

  double log_magnitude_ = -std::numeric_limits<double>::infinity();
  double phase_ = 0.0;
};

/// Sum of scaled terms, returned as (sum / exp(scale), scale) where scale is
/// the largest log-magnitude among the terms. All-zero input gives scale -inf.
struct NormalizedSum {
  Complex normalized;
  double scale;
  double max_term;  ///< largest |term| / exp(scale), i.e. 1 unless all zero
};

inline NormalizedSum normalized_sum(std::span<const ScaledComplex> terms) {
  double scale = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) scale = std::max(scale, t.log_magnitude());
  if (std::isinf(scale) && scale < 0) return {Complex{}, scale, 0.0};
  Complex sum{};
  double max_term = 0.0;
  for (const auto& t : terms) {
    if (t.is_zero()) continue;
    const Complex v = std::polar(std::exp(t.log_magnitude() - scale), t.phase());
    sum += v;
    max_term = std::max(max_term, std::abs(v));
  }
  return {sum, scale, max_term};
}

/// |a - b| / max(|a|, |b|), computed without leaving the scaled representation.
inline double relative_difference(const ScaledComplex& a, const ScaledComplex& b) {
  if (a.is_zero() && b.is_zero()) return 0.0;
  const ScaledComplex minus_b = ScaledComplex::from_log(b.log_magnitude(), b.phase() + std::numbers::pi);
  const ScaledComplex terms[] = {a, minus_b};
  const auto s = normalized_sum(terms);
  return std::abs(s.normalized) / s.max_term;
}

}  // namespace kp_rankone
