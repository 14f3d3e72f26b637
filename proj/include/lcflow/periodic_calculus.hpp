#pragma once

// Spectral calculus for smooth periodic scalar fields sampled on a uniform
// grid, plus numerical checks of the Wirtinger-type inequalities and the
// iterated interpolation inequality for curvature norms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lcflow/fft.hpp"

namespace lcflow {

/// N samples of a P-periodic function at x_i = i * spacing, P = N * spacing.
class PeriodicField {
 public:
  PeriodicField() = default;
  PeriodicField(std::vector<double> values, double spacing)
      : values_(std::move(values)), spacing_(spacing) {
    if (values_.empty()) throw std::invalid_argument("PeriodicField: no samples");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
      throw std::invalid_argument("PeriodicField: spacing must be positive and finite");
  }

  /// Samples f(x) at N uniform points of [0, period).
  template <class F>
  static PeriodicField sample(F&& f, std::size_t n, double period) {
    std::vector<double> v(n);
    const double dx = period / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(dx * static_cast<double>(i));
    return PeriodicField(std::move(v), dx);
  }

  std::size_t size() const { return values_.size(); }
  double spacing() const { return spacing_; }
  double period() const { return spacing_ * static_cast<double>(values_.size()); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::vector<double> values_;
  double spacing_ = 1.0;
};

namespace detail {

inline void require_same_grid(const PeriodicField& a, const PeriodicField& b) {
  if (a.size() != b.size() || a.spacing() != b.spacing())
    throw std::invalid_argument("PeriodicField: grids differ");
}

// (i kappa)^m for one DFT bin; odd orders drop the Nyquist bin.
inline cplx spectral_multiplier(std::size_t j, std::size_t n, double period, int order) {
  const long w = wavenumber(j, n);
  if (order % 2 == 1 && n % 2 == 0 && w == -static_cast<long>(n / 2)) return {0.0, 0.0};
  const double kappa = 2.0 * std::numbers::pi * static_cast<double>(w) / period;
  cplx ik{0.0, kappa};
  cplx r{1.0, 0.0};
  for (int p = 0; p < order; ++p) r *= ik;
  return r;
}

}  // namespace detail

inline PeriodicField operator*(const PeriodicField& a, const PeriodicField& b) {
  detail::require_same_grid(a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
  return {std::move(v), a.spacing()};
}

inline PeriodicField operator+(const PeriodicField& a, const PeriodicField& b) {
  detail::require_same_grid(a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
  return {std::move(v), a.spacing()};
}

inline PeriodicField operator-(const PeriodicField& a, const PeriodicField& b) {
  detail::require_same_grid(a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  return {std::move(v), a.spacing()};
}

inline PeriodicField operator*(double s, const PeriodicField& a) {
  std::vector<double> v(a.values());
  for (auto& x : v) x *= s;
  return {std::move(v), a.spacing()};
}

/// Trapezoidal quadrature over one period (spectrally accurate for smooth data).
inline double integral(const PeriodicField& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return sum * f.spacing();
}

inline double mean(const PeriodicField& f) { return integral(f) / f.period(); }

inline double max_abs(const PeriodicField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Coefficients below this fraction of max |f| are round-off for data stored
/// in double precision; high derivatives would otherwise amplify them by j^m.
inline constexpr double kSpectralNoiseFloor = 1e-14;

/// All derivatives of orders 1..max_order from a single forward transform.
/// With noise_floor > 0, DFT coefficients of magnitude below
/// noise_floor * max|f| are dropped first.
inline std::vector<PeriodicField> derivatives(const PeriodicField& f, int max_order, double noise_floor = 0.0) {
  if (max_order < 1 || max_order > 6)
    throw std::invalid_argument("derivative: order must be in [1, 6]");
  if (!f.all_finite()) throw std::invalid_argument("derivative: non-finite input");
  const std::size_t n = f.size();
  auto spectrum = fft_real(f.values());
  if (noise_floor > 0.0) {
    const double cut = noise_floor * max_abs(f) * static_cast<double>(n);
    for (auto& c : spectrum)
      if (std::abs(c) < cut) c = 0.0;
  }
  std::vector<PeriodicField> out;
  out.reserve(static_cast<std::size_t>(max_order));
  std::vector<cplx> work(n);
  for (int m = 1; m <= max_order; ++m) {
    for (std::size_t j = 0; j < n; ++j)
      work[j] = spectrum[j] * detail::spectral_multiplier(j, n, f.period(), m);
    const auto back = ifft(work);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = back[i].real();
    out.emplace_back(std::move(v), f.spacing());
  }
  return out;
}

/// m-th derivative by spectral differentiation, 1 <= m <= 6.
inline PeriodicField derivative(const PeriodicField& f, int order) {
  return std::move(derivatives(f, order).back());
}

// ---------------------------------------------------------------------------
// Inequality checks

inline constexpr double kInequalitySlack = 1e-8;
inline constexpr double kInequalityFloor = 1e-30;

/// lhs <= rhs up to relative slack against the larger side, plus a tiny floor.
inline bool holds_with_slack(double lhs, double rhs, double slack = kInequalitySlack) {
  return lhs <= rhs + slack * std::max(std::abs(lhs), std::abs(rhs)) + kInequalityFloor;
}

struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = kInequalitySlack;
  bool holds = true;
};

inline InequalityReport make_report(std::string name, double lhs, double rhs) {
  return {std::move(name), lhs, rhs, kInequalitySlack, holds_with_slack(lhs, rhs)};
}

struct PswReport {
  double lhs_i = 0.0;
  double rhs_i = 0.0;
  double lhs_ii = 0.0;
  double rhs_ii = 0.0;
  double mean_removed = 0.0;
  bool holds = true;

  std::vector<InequalityReport> reports() const {
    return {make_report("psw_l2", lhs_i, rhs_i), make_report("psw_sup", lhs_ii, rhs_ii)};
  }
};

/// Poincare-Sobolev-Wirtinger pair for the zero-mean part of f:
///   int f^2 <= (P^2 / 4 pi^2) int f_x^2   and   |f|_inf^2 <= (P / 2 pi) int f_x^2.
inline PswReport check_psw(const PeriodicField& f) {
  const double pi = std::numbers::pi;
  PswReport r;
  r.mean_removed = mean(f);
  std::vector<double> centred(f.values());
  for (auto& v : centred) v -= r.mean_removed;
  const PeriodicField g(std::move(centred), f.spacing());
  const PeriodicField gx = derivative(g, 1);
  const double P = g.period();
  const double dirichlet = integral(gx * gx);
  r.lhs_i = integral(g * g);
  r.rhs_i = P * P / (4.0 * pi * pi) * dirichlet;
  const double sup = max_abs(g);
  r.lhs_ii = sup * sup;
  r.rhs_ii = P / (2.0 * pi) * dirichlet;
  r.holds = holds_with_slack(r.lhs_i, r.rhs_i) && holds_with_slack(r.lhs_ii, r.rhs_ii);
  return r;
}

/// int k_{s^(n-1)}^2 <= (int k^2)^(1/n) (int k_{s^n}^2)^((n-1)/n), 1 <= n <= 4.
inline InequalityReport check_iterated_interpolation(const PeriodicField& k, int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("check_iterated_interpolation: n must be in [1, 4]");
  const auto ds = derivatives(k, n);
  auto norm2 = [&](int order) {
    const PeriodicField& f = order == 0 ? k : ds[static_cast<std::size_t>(order - 1)];
    return integral(f * f);
  };
  const double lhs = norm2(n - 1);
  const double dn = static_cast<double>(n);
  const double rhs = std::pow(norm2(0), 1.0 / dn) * std::pow(norm2(n), (dn - 1.0) / dn);
  return make_report("iterated_interpolation_n" + std::to_string(n), lhs, rhs);
}

}  // namespace lcflow
