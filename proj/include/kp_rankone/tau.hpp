#pragma once

// Evaluation of tau(t) = det(A exp(g(B)) C^T), its exact Miwa shifts, the
// discrete lattice form, and derivatives of log tau.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/scaled_complex.hpp"
#include "kp_rankone/triple.hpp"

namespace kp_rankone {

inline constexpr int kDefaultTruncation = 6;

/// KP times (t_1, ..., t_K), truncated; g(x) = sum_i t_i x^i.
class TimeVector {
 public:
  explicit TimeVector(std::vector<Complex> values) : values_(std::move(values)) {
    if (values_.empty()) throw DimensionError("TimeVector: truncation order K must be >= 1");
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DimensionError("TimeVector: non-finite time");
  }

  static TimeVector zeros(int k = kDefaultTruncation) {
    return TimeVector(std::vector<Complex>(static_cast<std::size_t>(k)));
  }

  /// (x, 0, ..., 0) with K entries.
  static TimeVector along_x(Complex x, int k = kDefaultTruncation) {
    auto t = zeros(k);
    t.values_[0] = x;
    return t;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<Complex>& values() const { return values_; }

  /// t_i for 1-based i; zero beyond the truncation.
  Complex operator()(int i) const {
    return i >= 1 && i <= size() ? values_[static_cast<std::size_t>(i - 1)] : Complex{};
  }

  /// Copy with t_i replaced (extends with zeros if i > K).
  TimeVector with(int i, Complex value) const {
    auto copy = values_;
    if (static_cast<std::size_t>(i) > copy.size()) copy.resize(static_cast<std::size_t>(i));
    copy[static_cast<std::size_t>(i - 1)] = value;
    return TimeVector(std::move(copy));
  }

  /// Copy with t_i incremented by delta.
  TimeVector shifted(int i, Complex delta) const { return with(i, (*this)(i) + delta); }

  /// g(z) = sum_i t_i z^i for scalar z (Horner).
  Complex g(Complex z) const {
    Complex acc{};
    for (auto it = values_.rbegin(); it != values_.rend(); ++it) acc = (acc + *it) * z;
    return acc;
  }

 private:
  std::vector<Complex> values_;
};

/// g(B) = sum_{i=1..K} t_i B^i, evaluated as B (t_1 + B (t_2 + ... )).
inline CMatrix g_of(const CMatrix& b, const TimeVector& t) {
  const Eigen::Index n = b.rows();
  CMatrix acc = CMatrix::Zero(n, n);
  const auto& v = t.values();
  for (auto it = v.rbegin(); it != v.rend(); ++it) {
    acc.diagonal().array() += *it;
    acc = b * acc;
  }
  return acc;
}

/// One Miwa shift: t -> t - k [c^{-1}], i.e. a factor (I - B/c)^k.
struct MiwaShift {
  Complex c;
  int k = 1;
};
using MiwaShiftList = std::vector<MiwaShift>;

/// Concatenation; tau_miwa treats repeated parameters multiplicatively.
inline MiwaShiftList compose(MiwaShiftList first, const MiwaShiftList& second) {
  first.insert(first.end(), second.begin(), second.end());
  return first;
}

/// Combines entries with equal c into one entry with summed multiplicity.
inline MiwaShiftList merged(const MiwaShiftList& shifts) {
  MiwaShiftList out;
  for (const auto& s : shifts) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MiwaShift& o) { return o.c == s.c; });
    if (it == out.end())
      out.push_back(s);
    else
      it->k += s.k;
  }
  std::erase_if(out, [](const MiwaShift& s) { return s.k == 0; });
  return out;
}

namespace detail {

inline constexpr double kSingularRcond = 1e-13;

inline CMatrix integer_power(const CMatrix& base, int k, const std::string& what) {
  const Eigen::Index n = base.rows();
  if (k == 0) return identity(n);
  CMatrix factor = base;
  if (k < 0) {
    factor = checked_inverse<SingularShiftError>(base, kSingularRcond, what + ": factor is singular");
    k = -k;
  }
  CMatrix result = identity(n);
  while (k > 0) {
    if (k & 1) result = result * factor;
    factor = factor * factor;
    k >>= 1;
  }
  return result;
}

}  // namespace detail

/// Product over the list of (I - B/c)^k. Negative k requires c outside spec(B).
inline CMatrix miwa_factor(const CMatrix& b, const MiwaShiftList& shifts) {
  const Eigen::Index n = b.rows();
  CMatrix out = identity(n);
  for (const auto& s : shifts) {
    if (s.c == Complex{}) throw DimensionError("Miwa shift parameter must be nonzero");
    out = out * detail::integer_power(identity(n) - b / s.c, s.k, "Miwa shift");
  }
  return out;
}

inline ScaledComplex checked_det(const CMatrix& m) {
  if (!all_finite(m)) throw RangeError("tau: exp(g(B)) overflows the double range");
  return det_scaled(m);
}

/// tau(t) = det(A exp(g(B)) C^T). The triple is not re-validated.
inline ScaledComplex tau(const RankOneTriple& tr, const TimeVector& t) {
  return checked_det(tr.A() * matexp(g_of(tr.B(), t)) * tr.C().transpose());
}

/// tau(t - sum_j k_j [c_j^{-1}]) computed exactly: the shift multiplies the
/// inner N x N matrix by prod_j (I - B/c_j)^{k_j}.
inline ScaledComplex tau_miwa(const RankOneTriple& tr, const TimeVector& t, const MiwaShiftList& shifts) {
  return checked_det(tr.A() * matexp(g_of(tr.B(), t)) * miwa_factor(tr.B(), shifts) * tr.C().transpose());
}

/// det(A (c1 - B)^l (c2 - B)^m (c3 - B)^n exp(g(B)) C^T); base time defaults to 0.
inline ScaledComplex tau_discrete(const RankOneTriple& tr, int l, int m, int n_idx, Complex c1, Complex c2, Complex c3,
                                  const std::optional<TimeVector>& t = std::nullopt) {
  const CMatrix& b = tr.B();
  const Eigen::Index big_n = b.rows();
  CMatrix inner = detail::integer_power(c1 * identity(big_n) - b, l, "tau_discrete (c1 - B)") *
                  detail::integer_power(c2 * identity(big_n) - b, m, "tau_discrete (c2 - B)") *
                  detail::integer_power(c3 * identity(big_n) - b, n_idx, "tau_discrete (c3 - B)");
  if (t) inner = matexp(g_of(b, *t)) * inner;
  return checked_det(tr.A() * inner * tr.C().transpose());
}

// ---------------------------------------------------------------------------
// Derivatives of log tau
// ---------------------------------------------------------------------------

/// Multi-index of derivative orders in (t_1, t_2, t_3).
struct DerivativeOrder {
  int t1 = 0;
  int t2 = 0;
  int t3 = 0;
  int total() const { return t1 + t2 + t3; }
  int operator[](int axis) const { return axis == 0 ? t1 : axis == 1 ? t2 : t3; }
};

struct DerivativeOptions {
  /// Base central-difference step; orders above two use larger steps
  /// (see log_tau_derivative) so roundoff stays below truncation error.
  double step = 1e-3;
};

/// d/dt_k log tau = tr[(A e^{g(B)} C^T)^{-1} A B^k e^{g(B)} C^T], exact.
inline Complex log_tau_first_derivative(const RankOneTriple& tr, const TimeVector& t, int k) {
  const CMatrix e = matexp(g_of(tr.B(), t));
  if (!all_finite(e)) throw RangeError("log_tau_derivative: exp(g(B)) overflows");
  const CMatrix right = e * tr.C().transpose();
  const CMatrix m = tr.A() * right;
  Eigen::PartialPivLU<CMatrix> lu(m);
  if (!(lu.rcond() > detail::kSingularRcond)) throw PoleError("log_tau_derivative: tau vanishes at the base time");
  CMatrix bk_right = right;
  for (int i = 0; i < k; ++i) bk_right = tr.B() * bk_right;
  return lu.solve(tr.A() * bk_right).trace();
}

namespace detail {

// Central-difference stencils with O(h^2) error, as (offset, weight) pairs
// for derivative orders 0..3 (weights before division by h^order).
struct StencilPoint {
  int offset;
  double weight;
};
inline const std::vector<StencilPoint>& central_stencil(int order) {
  static const std::array<std::vector<StencilPoint>, 4> stencils = {{
      {{0, 1.0}},
      {{-1, -0.5}, {1, 0.5}},
      {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
      {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}},
  }};
  if (order < 0 || order > 3) throw DimensionError("finite-difference order out of range");
  return stencils[static_cast<std::size_t>(order)];
}

template <class F>
Complex tensor_difference(F&& f, const TimeVector& t, const std::array<int, 3>& orders, double h) {
  Complex acc{};
  for (const auto& p1 : central_stencil(orders[0]))
    for (const auto& p2 : central_stencil(orders[1]))
      for (const auto& p3 : central_stencil(orders[2])) {
        TimeVector point = t;
        if (p1.offset) point = point.shifted(1, p1.offset * h);
        if (p2.offset) point = point.shifted(2, p2.offset * h);
        if (p3.offset) point = point.shifted(3, p3.offset * h);
        acc += p1.weight * p2.weight * p3.weight * f(point);
      }
  return acc / std::pow(h, orders[0] + orders[1] + orders[2]);
}

}  // namespace detail

/// Mixed derivative of log tau in (t_1, t_2, t_3), total order 1..4.
///
/// One order is taken exactly through the trace identity; the remaining
/// orders are central differences of that exact derivative, Richardson
/// extrapolated over steps h and h/2. The step grows with the remaining
/// order r as h = step * 10^{(r-1)/2}.
inline Complex log_tau_derivative(const RankOneTriple& tr, const TimeVector& t, DerivativeOrder order,
                                  DerivativeOptions options = {}) {
  if (order.t1 < 0 || order.t2 < 0 || order.t3 < 0 || order.total() < 1 || order.total() > 4)
    throw DimensionError("log_tau_derivative: total order must be in 1..4");
  int exact_axis = 0;
  while (order[exact_axis] == 0) ++exact_axis;
  std::array<int, 3> rest = {order.t1, order.t2, order.t3};
  --rest[static_cast<std::size_t>(exact_axis)];
  const int remaining = rest[0] + rest[1] + rest[2];
  if (remaining == 0) return log_tau_first_derivative(tr, t, exact_axis + 1);

  auto first = [&](const TimeVector& p) { return log_tau_first_derivative(tr, p, exact_axis + 1); };
  const double h = options.step * std::pow(10.0, 0.5 * (remaining - 1));
  const Complex coarse = detail::tensor_difference(first, t, rest, h);
  const Complex fine = detail::tensor_difference(first, t, rest, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

// ---------------------------------------------------------------------------
// u = 2 d^2/dt1^2 log tau on a grid
// ---------------------------------------------------------------------------

/// Inclusive sampling start:end:count.
struct GridRange {
  double start = 0.0;
  double end = 0.0;
  int count = 1;

  double at(int i) const {
    if (count == 1) return start;
    return start + (end - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  }

  bool operator==(const GridRange&) const = default;
};

struct TimeGrid {
  GridRange t1;
  std::optional<GridRange> t2;
  std::optional<GridRange> t3;

  std::size_t size() const {
    return static_cast<std::size_t>(t1.count) * static_cast<std::size_t>(t2 ? t2->count : 1) *
           static_cast<std::size_t>(t3 ? t3->count : 1);
  }

  /// Grid points in row-major order (t1 slowest), applied on top of base.
  template <class F>
  void for_each(const TimeVector& base, F&& f) const {
    for (int i = 0; i < t1.count; ++i)
      for (int j = 0; j < (t2 ? t2->count : 1); ++j)
        for (int k = 0; k < (t3 ? t3->count : 1); ++k) {
          TimeVector p = base.with(1, t1.at(i));
          std::array<double, 3> coords = {t1.at(i), 0.0, 0.0};
          if (t2) {
            coords[1] = t2->at(j);
            p = p.with(2, coords[1]);
          }
          if (t3) {
            coords[2] = t3->at(k);
            p = p.with(3, coords[2]);
          }
          f(coords, p);
        }
  }
};

struct FieldSample {
  std::array<double, 3> coords{};  ///< (t1, t2, t3); unused axes are 0
  Complex value;                   ///< u, or NaN at poles
  ScaledComplex tau;
  bool pole = false;
};

/// Samples whose |tau| falls below this fraction of the grid maximum are poles.
inline constexpr double kPoleRelativeTau = 1e-10;

/// Computes the grid's tau values and marks poles by relative magnitude.
template <class ValueFn>
std::vector<FieldSample> sample_field(const RankOneTriple& tr, const TimeGrid& grid, const TimeVector& base,
                                      ValueFn&& value) {
  std::vector<FieldSample> samples;
  samples.reserve(grid.size());
  double max_log = -std::numeric_limits<double>::infinity();
  grid.for_each(base, [&](const std::array<double, 3>& coords, const TimeVector& p) {
    FieldSample s;
    s.coords = coords;
    s.tau = tau(tr, p);
    max_log = std::max(max_log, s.tau.log_magnitude());
    samples.push_back(s);
  });
  const double threshold = max_log + std::log(kPoleRelativeTau);
  std::size_t idx = 0;
  grid.for_each(base, [&](const std::array<double, 3>&, const TimeVector& p) {
    auto& s = samples[idx++];
    s.pole = s.tau.is_zero() || s.tau.log_magnitude() < threshold;
    if (!s.pole) {
      try {
        s.value = value(p);
      } catch (const PoleError&) {
        s.pole = true;
      }
    }
    if (s.pole) s.value = Complex(std::nan(""), std::nan(""));
  });
  return samples;
}

/// KP potential u = 2 d^2/dt1^2 log tau over the grid, poles flagged.
inline std::vector<FieldSample> u_field(const RankOneTriple& tr, const TimeGrid& grid, const TimeVector& base,
                                        DerivativeOptions options = {}) {
  return sample_field(tr, grid, base, [&](const TimeVector& p) {
    return 2.0 * log_tau_derivative(tr, p, {2, 0, 0}, options);
  });
}

}  // namespace kp_rankone
