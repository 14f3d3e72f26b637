#pragma once

// Monitored scalars along a trajectory, evolution-identity residuals, the
// oscillation budget, non-convexity bookkeeping, decay-rate fits and
// soliton residuals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcflow/curve.hpp"
#include "lcflow/flow.hpp"
#include "lcflow/periodic_calculus.hpp"

namespace lcflow {

struct DiagnosticsRecord {
  double t = 0.0;
  long step = 0;
  double L = 0.0;
  double A = 0.0;
  double I = 0.0;
  double kbar = 0.0;
  double K_osc = 0.0;
  double h = 0.0;
  double nk2 = 0.0;    // int k^2 ds
  double nks2 = 0.0;   // int k_s^2 ds
  double nkss2 = 0.0;  // int k_ss^2 ds
  double nks32 = 0.0;  // int k_sss^2 ds
  double min_k = 0.0;
  bool embedded = true;
  double max_disp = 0.0;
  /// Largest node movement since the previous record.
  double interval_disp = 0.0;
  double nonconvex_time = 0.0;
  double r_iii = 0.0;
  double r_iv = 0.0;
  double r_v = 0.0;
  double r_vi = 0.0;
  double r_vi_full = 0.0;
};

/// K_osc below which a curve counts as a circle up to round-off.
inline constexpr double kRoundKosc = 1e-20;

inline double sq_norm(const PeriodicField& f) { return integral(f * f); }

inline PeriodicField oscillation(const GeometryCache& g) {
  std::vector<double> v(g.k.values());
  for (auto& x : v) x -= g.kbar;
  return {std::move(v), g.spacing()};
}

/// K_osc = L int (k - kbar)^2 ds.
inline double k_osc(const GeometryCache& g) { return g.length * sq_norm(oscillation(g)); }

inline double isoperimetric_ratio(double length, double area) {
  return length * length / (4.0 * std::numbers::pi * area);
}

inline DiagnosticsRecord record(const FlowState& state, const ClosedCurve& initial, HMode mode) {
  const GeometryCache g = geometry(state.curve);
  DiagnosticsRecord r;
  r.t = state.t;
  r.step = state.step;
  r.L = g.length;
  r.A = g.area;
  r.I = isoperimetric_ratio(g.length, g.area);
  r.kbar = g.kbar;
  r.K_osc = k_osc(g);
  r.h = compute_h(g, mode);
  r.nk2 = sq_norm(g.k);
  r.nks2 = sq_norm(g.k_s());
  r.nkss2 = sq_norm(g.k_ss());
  r.nks32 = sq_norm(g.k_sss());
  r.min_k = *std::min_element(g.k.values().begin(), g.k.values().end());
  r.embedded = is_embedded(state.curve);
  if (initial.size() == state.curve.size()) {
    for (std::size_t i = 0; i < initial.size(); ++i)
      r.max_disp = std::max(r.max_disp, norm(state.curve[i] - initial[i]));
  }
  r.nonconvex_time = state.nonconvex_time;
  return r;
}

// ---------------------------------------------------------------------------
// Evolution identities

/// Left-side quantity and right-side terms of one evolution identity.
struct IdentityTerms {
  double quantity = 0.0;
  std::vector<double> terms;

  double rhs() const {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
};

struct EvolutionTerms {
  IdentityTerms iii;  // d/dt int k^2
  IdentityTerms iv;   // d/dt K_osc
  IdentityTerms v;    // d/dt int k_s^2
  IdentityTerms vi;   // d/dt int k_ss^2, as usually stated
  IdentityTerms vi_full;  // d/dt int k_ss^2 with every term kept
};

inline EvolutionTerms evolution_terms(const GeometryCache& g, double h) {
  const auto& k = g.k;
  const auto& ks = g.k_s();
  const auto& kss = g.k_ss();
  const auto& ks3 = g.k_sss();
  const auto& ks4 = g.k_ssss();
  const double L = g.length;
  const double kb = g.kbar;
  const PeriodicField osc = oscillation(g);
  const PeriodicField k2 = k * k;
  const PeriodicField ks2 = ks * ks;
  const PeriodicField kss2 = kss * kss;

  EvolutionTerms e;
  e.iii.quantity = integral(k2);
  e.iii.terms = {-2.0 * integral(kss2), 3.0 * integral(k2 * ks2), h * integral(k2 * k)};

  e.iv.quantity = L * sq_norm(osc);
  e.iv.terms = {-2.0 * L * integral(kss2),
                3.0 * L * integral(osc * osc * ks2),
                6.0 * L * kb * integral(osc * ks2),
                2.0 * kb * kb * L * integral(ks2),
                L * h * (integral(osc * osc * osc) + 3.0 * kb * integral(osc * osc))};

  e.v.quantity = integral(ks2);
  e.v.terms = {-2.0 * integral(ks3 * ks3), 2.0 * integral(k2 * kss2), integral(ks2 * ks2) / 3.0,
               5.0 * h * integral(k * ks2)};

  e.vi.quantity = integral(kss2);
  e.vi.terms = {-2.0 * integral(ks4 * ks4), 2.0 * integral(k2 * ks3 * ks3), -integral(ks2 * kss2),
                7.0 * h * integral(k * kss2)};

  // Differentiating directly with k_t = F_ss + k^2 F gives -3 int k_s^2 k_ss^2
  // and an extra -4 int k k_ss^3, which the stated form lacks.
  e.vi_full.quantity = e.vi.quantity;
  e.vi_full.terms = {e.vi.terms[0], e.vi.terms[1], -3.0 * integral(ks2 * kss2), -4.0 * integral(k * kss2 * kss),
                     e.vi.terms[3]};
  return e;
}

struct IdentityResiduals {
  double r_iii = 0.0;
  double r_iv = 0.0;
  double r_v = 0.0;
  double r_vi = 0.0;
  double r_vi_full = 0.0;

  double max() const { return std::max({r_iii, r_iv, r_v, r_vi}); }
};

namespace detail {

// |(Q1 - Q0)/dt - (rhs0 + rhs1)/2| relative to the largest participating term.
inline double identity_residual(const IdentityTerms& a, const IdentityTerms& b, double dt) {
  const double lhs = (b.quantity - a.quantity) / dt;
  const double rhs = 0.5 * (a.rhs() + b.rhs());
  double scale = std::abs(lhs);
  for (std::size_t i = 0; i < a.terms.size(); ++i)
    scale = std::max(scale, std::abs(0.5 * (a.terms[i] + b.terms[i])));
  scale = std::max(scale, 1e-30);
  return std::abs(lhs - rhs) / scale;
}

}  // namespace detail

/// Residuals of the evolution identities for d/dt of int k^2, K_osc,
/// int k_s^2 and int k_ss^2 between two states of one trajectory. The time
/// derivative is the centred difference over the interval; the right side
/// is averaged over its two ends. Both are second-order accurate.
inline IdentityResiduals identity_residuals(const FlowState& prev, const FlowState& next, HMode mode) {
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) return {};
  const GeometryCache g0 = geometry(prev.curve);
  const GeometryCache g1 = geometry(next.curve);
  // On a round circle every term vanishes and the ratio is round-off over
  // round-off; report exact agreement.
  if (k_osc(g0) <= kRoundKosc && k_osc(g1) <= kRoundKosc) return {};
  const auto e0 = evolution_terms(g0, compute_h(g0, mode));
  const auto e1 = evolution_terms(g1, compute_h(g1, mode));
  return {detail::identity_residual(e0.iii, e1.iii, dt), detail::identity_residual(e0.iv, e1.iv, dt),
          detail::identity_residual(e0.v, e1.v, dt), detail::identity_residual(e0.vi, e1.vi, dt),
          detail::identity_residual(e0.vi_full, e1.vi_full, dt)};
}

// ---------------------------------------------------------------------------
// Oscillation threshold and budget

/// Coefficient of int k_ss^2 in the K_osc differential inequality.
inline double kosc_coefficient(double K, int omega) {
  const double pi = std::numbers::pi;
  const double w = static_cast<double>(omega);
  return 2.0 - std::pow(K, 1.5) / (4.0 * pi * pi * std::sqrt(2.0 * pi) * w) - 3.0 * K / (2.0 * pi) -
         6.0 * w * std::sqrt(K);
}

/// Smallest positive root 2K* of kosc_coefficient(K, omega) = 0, by bisection
/// on (0, 4] to absolute 1e-12.
inline double solve_k_star(int omega) {
  if (omega < 1) throw std::invalid_argument("solve_k_star: omega must be >= 1");
  double lo = 0.0;
  double hi = 4.0;
  if (!(kosc_coefficient(hi, omega) < 0.0)) throw std::runtime_error("solve_k_star: no sign change on (0, 4]");
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (kosc_coefficient(mid, omega) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Coefficient of |k_sss|^2 in the int k_s^2 estimate, at oscillation level K.
inline double ks_estimate_coefficient(double K) {
  const double pi = std::numbers::pi;
  return 2.0 - 5.0 * (1.0 / 27.0 + K / pi) -
         (5.0 * K / (8.0 * pi * pi)) * (std::sqrt(K) / std::sqrt(2.0 * pi) + 2.0);
}

struct KoscBudget {
  int omega = 1;
  double K_star_2 = 0.0;
  double l1_bound = 0.0;
  double nonconvex_bound = 0.0;
  double L0 = 0.0;
  double A0 = 0.0;
  double K0 = 0.0;
  double I0 = 0.0;

  double k_star() const { return 0.5 * K_star_2; }
  /// K_osc(0) < K* and I(0) < 4 pi^2 / (4 pi^2 - K*), with omega = 1.
  bool hypotheses_hold() const {
    const double fpi2 = 4.0 * std::numbers::pi * std::numbers::pi;
    return omega == 1 && A0 > 0.0 && K0 < k_star() && I0 < fpi2 / (fpi2 - k_star());
  }
};

inline KoscBudget make_budget(const GeometryCache& g0) {
  const double pi = std::numbers::pi;
  KoscBudget b;
  b.omega = g0.winding;
  b.K_star_2 = solve_k_star(std::max(1, std::abs(g0.winding)));
  b.L0 = g0.length;
  b.A0 = g0.area;
  b.K0 = k_osc(g0);
  b.I0 = isoperimetric_ratio(g0.length, g0.area);
  // Isoperimetric deficit; zero for a circle, where round-off would leave
  // a tiny value of either sign.
  double deficit = b.L0 * b.L0 / (4.0 * pi) - b.A0;
  if (std::abs(deficit) <= 64.0 * std::numeric_limits<double>::epsilon() * b.L0 * b.L0 / (4.0 * pi)) deficit = 0.0;
  b.l1_bound = b.L0 * b.L0 / (2.0 * pi) * deficit;
  b.nonconvex_bound = b.L0 * b.L0 / (4.0 * pi * pi * pi) * deficit;
  return b;
}

inline KoscBudget make_budget(const ClosedCurve& initial) { return make_budget(geometry(initial)); }

/// Outcome of one check, serialised as {check, bound, observed, holds}.
struct CheckReport {
  std::string check;
  double bound = 0.0;
  double observed = 0.0;
  bool holds = true;
};

inline CheckReport upper_check(std::string name, double observed, double bound) {
  return {std::move(name), bound, observed, holds_with_slack(observed, bound)};
}

/// (a) int K_osc dt <= (L0^2/2pi)(L0^2/4pi - A0);
/// (b) K_osc stays below 2K* when the convergence hypotheses hold at t = 0;
/// (c) K_osc(t) <= K_osc(0) + (16 pi^3 omega^3 / L0^2)(A(t) - A0) at every sample.
inline std::vector<CheckReport> check_kosc_budget(std::span<const DiagnosticsRecord> series,
                                                  const KoscBudget& budget) {
  if (series.empty()) throw std::invalid_argument("check_kosc_budget: empty series");
  const double pi = std::numbers::pi;
  double l1 = 0.0;
  double kmax = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    kmax = std::max(kmax, series[i].K_osc);
    if (i > 0) l1 += 0.5 * (series[i].K_osc + series[i - 1].K_osc) * (series[i].t - series[i - 1].t);
  }
  const double w = static_cast<double>(budget.omega);
  const double c = 16.0 * pi * pi * pi * w * w * w / (budget.L0 * budget.L0);
  const double K0 = series.front().K_osc;
  const double A0 = series.front().A;
  double worst = -std::numeric_limits<double>::infinity();
  bool running_ok = true;
  for (const auto& r : series) {
    const double bound = K0 + c * (r.A - A0);
    worst = std::max(worst, r.K_osc - bound);
    // The bound is a difference of terms of size c A; its round-off sets the slack.
    const double slack = kInequalitySlack * std::max({std::abs(r.K_osc), std::abs(bound), c * std::abs(r.A)});
    running_ok = running_ok && r.K_osc <= bound + slack;
  }
  CheckReport threshold{"kosc_threshold", budget.K_star_2, kmax,
                        !budget.hypotheses_hold() || kmax < budget.K_star_2};
  // K_osc of a round circle is round-off of order kRoundKosc, not zero.
  const double duration = series.back().t - series.front().t;
  CheckReport l1_report{"kosc_l1", budget.l1_bound, l1,
                        holds_with_slack(l1, budget.l1_bound + kRoundKosc * duration)};
  return {l1_report, {"kosc_running", 0.0, worst, running_ok}, threshold};
}

/// Measured non-convex time against (L0^2/4pi^3)(L0^2/4pi - A0), and the
/// area growth rate dA/dt >= 4 pi^3 / L0^2 over every interval that starts
/// non-convex.
inline std::vector<CheckReport> check_nonconvex_bound(const FlowState& final_state,
                                                      std::span<const DiagnosticsRecord> series,
                                                      const KoscBudget& budget) {
  const double pi = std::numbers::pi;
  std::vector<CheckReport> out;
  out.push_back(upper_check("nonconvex_bound", final_state.nonconvex_time, budget.nonconvex_bound));
  const double rate_bound = 4.0 * pi * pi * pi / (budget.L0 * budget.L0);
  double min_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    if (series[i].min_k > 0.0) continue;
    const double dt = series[i + 1].t - series[i].t;
    if (dt > 0.0) min_rate = std::min(min_rate, (series[i + 1].A - series[i].A) / dt);
  }
  const bool any = std::isfinite(min_rate);
  out.push_back({"nonconvex_mechanism", rate_bound, any ? min_rate : 0.0, !any || min_rate >= rate_bound});
  return out;
}

// ---------------------------------------------------------------------------
// Decay fits

struct DecayFit {
  double rate = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
};

struct TimeWindow {
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
};

/// Least-squares line through (t, log y); rate is minus the slope.
inline DecayFit fit_log_linear(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_decay: size mismatch");
  if (t.size() < 10) throw std::invalid_argument("fit_decay: fewer than 10 samples in window");
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0)) throw std::invalid_argument("fit_decay: non-positive value in window");
    const double ly = std::log(y[i]);
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
    syy += ly * ly;
  }
  const double vt = stt - st * st / n;
  const double vy = syy - sy * sy / n;
  const double cty = sty - st * sy / n;
  if (!(vt > 0.0)) throw std::invalid_argument("fit_decay: degenerate time window");
  DecayFit f;
  f.rate = -cty / vt;
  f.r_squared = vy > 0.0 ? cty * cty / (vt * vy) : 1.0;
  f.samples = t.size();
  return f;
}

/// Field accessor by diagnostics column name; `osc` is int (k - kbar)^2 ds.
inline std::function<double(const DiagnosticsRecord&)> field_accessor(const std::string& name) {
  if (name == "K_osc") return [](const DiagnosticsRecord& r) { return r.K_osc; };
  if (name == "osc") return [](const DiagnosticsRecord& r) { return r.K_osc / r.L; };
  if (name == "nks2") return [](const DiagnosticsRecord& r) { return r.nks2; };
  if (name == "nkss2") return [](const DiagnosticsRecord& r) { return r.nkss2; };
  if (name == "nks32") return [](const DiagnosticsRecord& r) { return r.nks32; };
  if (name == "h") return [](const DiagnosticsRecord& r) { return std::abs(r.h); };
  if (name == "interval_disp") return [](const DiagnosticsRecord& r) { return r.interval_disp; };
  throw std::invalid_argument("fit_decay: unknown field '" + name + "'");
}

inline DecayFit fit_decay(std::span<const DiagnosticsRecord> series, const std::string& field,
                          TimeWindow window) {
  const auto get = field_accessor(field);
  std::vector<double> t, y;
  for (const auto& r : series) {
    if (r.t < window.t_min || r.t > window.t_max) continue;
    t.push_back(r.t);
    y.push_back(get(r));
  }
  return fit_log_linear(t, y);
}

/// Times where K_osc lies in [lo, hi]; the late, linear regime by default.
inline TimeWindow kosc_window(std::span<const DiagnosticsRecord> series, double hi = 1e-4, double lo = 0.0) {
  TimeWindow w{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& r : series) {
    if (r.K_osc <= hi && r.K_osc >= lo) {
      w.t_min = std::min(w.t_min, r.t);
      w.t_max = std::max(w.t_max, r.t);
    }
  }
  return w;
}

/// Decay rate 2(m^4 - m^2)/rho^4 of squared curvature norms for a radial
/// mode-m perturbation of the circle of radius rho.
inline double linearized_rate(int mode, double radius) {
  const double m = static_cast<double>(mode);
  return 2.0 * (m * m * m * m - m * m) / std::pow(radius, 4);
}

// ---------------------------------------------------------------------------
// Solitons

enum class SolitonKind { stationary, translator, rotator };

inline SolitonKind parse_soliton_kind(const std::string& s) {
  if (s == "stationary") return SolitonKind::stationary;
  if (s == "translator") return SolitonKind::translator;
  if (s == "rotator") return SolitonKind::rotator;
  throw std::invalid_argument("soliton kind must be stationary, translator or rotator, got '" + s + "'");
}

inline std::string to_string(SolitonKind k) {
  switch (k) {
    case SolitonKind::stationary: return "stationary";
    case SolitonKind::translator: return "translator";
    case SolitonKind::rotator: return "rotator";
  }
  return "?";
}

struct SolitonFit {
  SolitonKind kind = SolitonKind::stationary;
  double residual = 0.0;
  Vec2 velocity{};        // translator
  double angular = 0.0;   // rotator S
};

/// Relative L2 misfit of h - k_ss against the best rigid-motion speed of the
/// requested kind; scale = max(|k_ss|_2, 1/L).
inline SolitonFit soliton_residual(const ClosedCurve& curve, SolitonKind kind) {
  if (curve.winding() == 0) throw std::invalid_argument("soliton_residual: winding number is zero");
  const GeometryCache g = geometry(curve);
  const double h = compute_h(g, HMode::continuum);
  const std::size_t n = g.size();
  const double ds = g.spacing();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = h - g.k_ss()[i];

  SolitonFit fit;
  fit.kind = kind;
  if (kind == SolitonKind::translator) {
    double gxx = 0, gxy = 0, gyy = 0, bx = 0, by = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 nu = g.normal[i];
      gxx += nu.x * nu.x;
      gxy += nu.x * nu.y;
      gyy += nu.y * nu.y;
      bx += r[i] * nu.x;
      by += r[i] * nu.y;
    }
    const double det = gxx * gyy - gxy * gxy;
    if (std::abs(det) > 1e-300) fit.velocity = {(gyy * bx - gxy * by) / det, (gxx * by - gxy * bx) / det};
    for (std::size_t i = 0; i < n; ++i) r[i] -= dot(fit.velocity, g.normal[i]);
  } else if (kind == SolitonKind::rotator) {
    const Vec2 c = curve.centroid();
    std::vector<double> basis(n);
    double gg = 0, gr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      basis[i] = 2.0 * dot(curve[i] - c, g.tangent[i]);
      gg += basis[i] * basis[i];
      gr += basis[i] * r[i];
    }
    // Tangential radius vanishes identically on a circle about its centre.
    if (gg * ds > 1e-24 * g.length * g.length * g.length) fit.angular = gr / gg;
    for (std::size_t i = 0; i < n; ++i) r[i] -= fit.angular * basis[i];
  }
  const double misfit = std::sqrt(sq_norm(PeriodicField(std::move(r), ds)));
  const double scale = std::max(std::sqrt(sq_norm(g.k_ss())), 1.0 / g.length);
  fit.residual = misfit / scale;
  return fit;
}

// ---------------------------------------------------------------------------
// Static inequality suite

/// |h| <= (1/2pi)(int k^2)^(1 - 1/n)(int k_{s^n}^2)^(1/n), h in continuum mode.
inline InequalityReport check_h_bound(const GeometryCache& g, int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("check_h_bound: n must be in [1, 4]");
  const double h = compute_h(g, HMode::continuum);
  const double dn = static_cast<double>(n);
  const double bound = std::pow(sq_norm(g.k), 1.0 - 1.0 / dn) *
                       std::pow(sq_norm(g.k_derivs[static_cast<std::size_t>(n - 1)]), 1.0 / dn) /
                       (2.0 * std::numbers::pi);
  return make_report("h_bound_n" + std::to_string(n), std::abs(h), bound);
}

inline InequalityReport check_h_bound(const ClosedCurve& curve, int n) { return check_h_bound(geometry(curve), n); }

/// Wirtinger pair on k - kbar and on k_s, iterated interpolation and the
/// h bound for n = 1..4.
inline std::vector<InequalityReport> inequality_suite(const GeometryCache& g) {
  std::vector<InequalityReport> out;
  for (auto r : check_psw(g.k).reports()) {
    r.name += "_k";
    out.push_back(r);
  }
  for (auto r : check_psw(g.k_s()).reports()) {
    r.name += "_ks";
    out.push_back(r);
  }
  for (int n = 1; n <= 4; ++n) out.push_back(check_iterated_interpolation(g.k, n));
  for (int n = 1; n <= 4; ++n) out.push_back(check_h_bound(g, n));
  return out;
}

}  // namespace lcflow
