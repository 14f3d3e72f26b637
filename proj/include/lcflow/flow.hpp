#pragma once

// Length-constrained curve diffusion: normal speed F = h(t) - k_ss with the
// global term h chosen to keep the length fixed.
//
// Time stepping is an exponential fourth-order Runge-Kutta scheme (ETDRK4,
// Cox-Matthews with contour-integral coefficients). The stiff part
// -d^4/ds^4 acting on the node positions is integrated exactly per Fourier
// mode; everything else (F nu + d^4 gamma / ds^4) is the explicit remainder.
// Each step is followed by arc-length resampling and, optionally, a
// homothety about the centroid that restores the initial length.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lcflow/curve.hpp"
#include "lcflow/fft.hpp"
#include "lcflow/periodic_calculus.hpp"

namespace lcflow {

enum class HMode { continuum, discrete_exact };

inline std::string to_string(HMode m) {
  return m == HMode::continuum ? "continuum" : "discrete_exact";
}

inline HMode parse_h_mode(const std::string& s) {
  if (s == "continuum") return HMode::continuum;
  if (s == "discrete_exact") return HMode::discrete_exact;
  throw std::invalid_argument("h_mode: expected 'continuum' or 'discrete_exact', got '" + s + "'");
}

struct FlowConfig {
  std::size_t n = 256;
  /// Time-step safety factor; dt = sigma * (N/2)^3 / k_max^4 with k_max = pi / ds.
  double sigma = 0.05;
  HMode h_mode = HMode::discrete_exact;
  bool rescale = true;
  double t_end = 1.0;
  double kosc_stop = 1e-10;
  long record_every = 1;
  /// Curve snapshot cadence in records; 0 keeps only the first and last.
  long snapshot_every = 0;
  /// Run the self-intersection test after every step.
  bool monitor_embedded = false;
  /// Hard cap on steps, 0 for none.
  long max_steps = 0;

  void validate() const {
    if (n < kMinNodes || n % 2 != 0) throw std::invalid_argument("n: must be even and >= 16");
    if (!(sigma > 0.0 && sigma <= 0.3)) throw std::invalid_argument("sigma: must lie in (0, 0.3]");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end: must be positive");
    if (!(kosc_stop >= 0.0)) throw std::invalid_argument("kosc_stop: must be non-negative");
    if (record_every < 1) throw std::invalid_argument("record_every: must be >= 1");
    if (snapshot_every < 0) throw std::invalid_argument("snapshot_every: must be >= 0");
    if (max_steps < 0) throw std::invalid_argument("max_steps: must be >= 0");
  }
};

struct FlowState {
  ClosedCurve curve;
  double t = 0.0;
  long step = 0;
  double nonconvex_time = 0.0;
  double L0 = 0.0;
  bool intersection_flagged = false;

  static FlowState start(ClosedCurve c) {
    const double length = c.length();
    return FlowState{std::move(c), 0.0, 0, 0.0, length, false};
  }
};

/// Raised when a stage produces non-finite values; carries the last valid state.
class FlowError : public std::runtime_error {
 public:
  FlowError(const std::string& what, FlowState last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}
  const FlowState& last_valid() const { return last_valid_; }

 private:
  FlowState last_valid_;
};

// ---------------------------------------------------------------------------
// Global term and speed

/// h = -(int k_s^2 ds) / (2 pi omega) in continuum mode, or
/// h = (sum k k_ss ds) / (sum k ds) in discrete_exact mode, which zeroes the
/// semi-discrete length derivative -sum k (h - k_ss) ds.
inline double compute_h(const GeometryCache& g, HMode mode) {
  if (g.winding == 0) throw std::invalid_argument("compute_h: winding number is zero; h is undefined");
  if (mode == HMode::continuum)
    return -integral(g.k_s() * g.k_s()) / (2.0 * std::numbers::pi * static_cast<double>(g.winding));
  return integral(g.k * g.k_ss()) / integral(g.k);
}

inline double compute_h(const ClosedCurve& curve, HMode mode) { return compute_h(geometry(curve), mode); }

/// F_i = h - (k_ss)_i. Nodes move by F_i along the inward normal.
inline PeriodicField velocity(const GeometryCache& g, double h) {
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = h - g.k_ss()[i];
  return {std::move(f), g.spacing()};
}

inline PeriodicField velocity(const ClosedCurve& curve, double h) { return velocity(geometry(curve), h); }

/// Time step for a curve of length L sampled at n nodes.
inline double time_step(double sigma, std::size_t n, double length) {
  const double kmax = std::numbers::pi * static_cast<double>(n) / length;
  const double half = 0.5 * static_cast<double>(n);
  return sigma * half * half * half / std::pow(kmax, 4);
}

namespace detail {

// Geometry of an arbitrarily parametrised closed curve z(u), u in [0, 1),
// given the DFT of its nodes. Used inside Runge-Kutta stages where the
// nodes are no longer exactly equidistant in arc length.
struct StageGeometry {
  std::vector<cplx> normal;
  std::vector<double> k;
  std::vector<double> k_s;
  std::vector<double> k_ss;
  std::vector<double> weight;  // ds per node
  double min_k = 0.0;
};

inline std::vector<double> real_derivative_u(std::span<const double> f) {
  const auto spec = fft_real(f);
  const auto d = derivative_u(spec, 1);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = d[i].real();
  return out;
}

inline StageGeometry stage_geometry(std::span<const cplx> spectrum) {
  const std::size_t n = spectrum.size();
  const auto zu = derivative_u(spectrum, 1);
  const auto zuu = derivative_u(spectrum, 2);
  StageGeometry g;
  g.normal.resize(n);
  g.k.resize(n);
  g.weight.resize(n);
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) {
    speed[i] = std::abs(zu[i]);
    g.normal[i] = cplx{0.0, 1.0} * zu[i] / speed[i];
    g.k[i] = (std::conj(zu[i]) * zuu[i]).imag() / (speed[i] * speed[i] * speed[i]);
    g.weight[i] = speed[i] / static_cast<double>(n);
  }
  g.k_s = real_derivative_u(g.k);
  for (std::size_t i = 0; i < n; ++i) g.k_s[i] /= speed[i];
  g.k_ss = real_derivative_u(g.k_s);
  for (std::size_t i = 0; i < n; ++i) g.k_ss[i] /= speed[i];
  g.min_k = *std::min_element(g.k.begin(), g.k.end());
  return g;
}

inline double stage_h(const StageGeometry& g, HMode mode, int winding) {
  if (mode == HMode::continuum) {
    double sum = 0.0;
    for (std::size_t i = 0; i < g.k.size(); ++i) sum += g.k_s[i] * g.k_s[i] * g.weight[i];
    return -sum / (2.0 * std::numbers::pi * static_cast<double>(winding));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.k.size(); ++i) {
    num += g.k[i] * g.k_ss[i] * g.weight[i];
    den += g.k[i] * g.weight[i];
  }
  return num / den;
}

inline bool all_finite(std::span<const cplx> v) {
  return std::all_of(v.begin(), v.end(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

}  // namespace detail

/// ETDRK4 integrator for one (n, L0, dt) triple; coefficients are computed once.
class Stepper {
 public:
  Stepper(const FlowConfig& config, std::size_t n, double L0)
      : config_(config), n_(n), L0_(L0), dt_(time_step(config.sigma, n, L0)) {
    config_.validate();
    constexpr int kContour = 32;
    lin_.resize(n);
    e_.resize(n);
    e2_.resize(n);
    q_.resize(n);
    f1_.resize(n);
    f2_.resize(n);
    f3_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double kappa = 2.0 * std::numbers::pi * static_cast<double>(wavenumber(j, n)) / L0;
      const double c = -std::pow(kappa, 4);
      lin_[j] = c;
      const double ch = c * dt_;
      e_[j] = std::exp(ch);
      e2_[j] = std::exp(0.5 * ch);
      cplx q{}, a{}, b{}, d{};
      for (int m = 1; m <= kContour; ++m) {
        const cplx r = ch + std::exp(cplx{0.0, std::numbers::pi * (m - 0.5) / kContour});
        const cplx er = std::exp(r);
        const cplx r3 = r * r * r;
        q += (std::exp(0.5 * r) - 1.0) / r;
        a += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
        b += (2.0 + r + er * (r - 2.0)) / r3;
        d += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
      }
      q_[j] = dt_ * (q / double(kContour)).real();
      f1_[j] = dt_ * (a / double(kContour)).real();
      f2_[j] = dt_ * (b / double(kContour)).real();
      f3_[j] = dt_ * (d / double(kContour)).real();
    }
  }

  double dt() const { return dt_; }
  const FlowConfig& config() const { return config_; }

  FlowState advance(const FlowState& state) const {
    if (state.curve.size() != n_) throw std::invalid_argument("step: node count does not match stepper");
    const int winding = state.curve.winding();
    if (winding == 0) throw std::invalid_argument("step: winding number is zero; h is undefined");

    const auto z = state.curve.as_complex();
    const auto v = fft(z);
    double min_k_start = 0.0;
    auto nonlinear = [&](const std::vector<cplx>& spec, double* min_k) {
      const auto g = detail::stage_geometry(spec);
      const double h = detail::stage_h(g, config_.h_mode, winding);
      std::vector<cplx> motion(n_);
      for (std::size_t i = 0; i < n_; ++i) motion[i] = (h - g.k_ss[i]) * g.normal[i];
      if (!detail::all_finite(motion)) throw FlowError("non-finite velocity in Runge-Kutta stage", state);
      auto out = fft(motion);
      // The outermost shell |w| >= N/2 - 1 receives the aliased image of the
      // curvature's Nyquist mode, which the stiff linear part cannot damp
      // consistently; the nonlinear forcing there is dropped.
      const long edge = static_cast<long>(n_ / 2) - 1;
      for (std::size_t j = 0; j < n_; ++j) {
        if (std::abs(wavenumber(j, n_)) >= edge)
          out[j] = 0.0;
        else
          out[j] -= lin_[j] * spec[j];
      }
      if (min_k) *min_k = g.min_k;
      return out;
    };

    const auto nv = nonlinear(v, &min_k_start);
    std::vector<cplx> a(n_), b(n_), c(n_), next(n_);
    for (std::size_t j = 0; j < n_; ++j) a[j] = e2_[j] * v[j] + q_[j] * nv[j];
    const auto na = nonlinear(a, nullptr);
    for (std::size_t j = 0; j < n_; ++j) b[j] = e2_[j] * v[j] + q_[j] * na[j];
    const auto nb = nonlinear(b, nullptr);
    for (std::size_t j = 0; j < n_; ++j) c[j] = e2_[j] * a[j] + q_[j] * (2.0 * nb[j] - nv[j]);
    const auto nc = nonlinear(c, nullptr);
    for (std::size_t j = 0; j < n_; ++j)
      next[j] = e_[j] * v[j] + f1_[j] * nv[j] + 2.0 * f2_[j] * (na[j] + nb[j]) + f3_[j] * nc[j];

    const auto moved = ifft(next);
    if (!detail::all_finite(moved)) throw FlowError("non-finite positions after step", state);
    std::vector<Vec2> pts(n_);
    for (std::size_t i = 0; i < n_; ++i) pts[i] = to_vec2(moved[i]);

    std::optional<ClosedCurve> curve;
    try {
      curve.emplace(resample_by_arclength(pts, n_));
      if (config_.rescale) {
        const double factor = state.L0 / curve->length();
        const Vec2 centre = curve->centroid();
        std::vector<Vec2> scaled(curve->points());
        for (auto& p : scaled) p = centre + factor * (p - centre);
        curve.emplace(std::move(scaled));
      }
    } catch (const std::invalid_argument& e) {
      throw FlowError(std::string("degenerate curve after step: ") + e.what(), state);
    }
    if (curve->winding() != winding) throw FlowError("winding number changed during step", state);

    FlowState out{std::move(*curve), state.t + dt_, state.step + 1, state.nonconvex_time, state.L0,
                  state.intersection_flagged};
    if (min_k_start <= 0.0) out.nonconvex_time += dt_;
    if (config_.monitor_embedded && !is_embedded(out.curve)) out.intersection_flagged = true;
    return out;
  }

 private:
  FlowConfig config_;
  std::size_t n_;
  double L0_;
  double dt_;
  std::vector<double> lin_, e_, e2_, q_, f1_, f2_, f3_;
};

/// One step of the flow. Builds the integrator coefficients on every call;
/// use Stepper directly for long runs.
inline FlowState step(const FlowState& state, const FlowConfig& config) {
  return Stepper(config, state.curve.size(), state.L0).advance(state);
}

}  // namespace lcflow
