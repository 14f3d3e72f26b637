// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "lcflow/scenarios.hpp"
#include "oracles.hpp"

using namespace lcflow;

namespace {

constexpr double pi = std::numbers::pi;

int failures = 0;

void verdict(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("%s  %2d  %-24s %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
  if (!ok) ++failures;
}

void note(const std::string& text) { std::printf("          %s\n", text.c_str()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Timed {
  ScenarioResult result;
  double seconds = 0.0;
};

Timed timed_run(const Scenario& sc) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run_scenario(sc)};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

CheckReport check(const ScenarioResult& r, const Scenario& sc, const std::string& name, double tol = 0.0) {
  return evaluate_check({name, tol}, sc, r);
}

// Largest residual of each identity inside the default residual window.
IdentityResiduals window_max(const Trajectory& tr) {
  const ResidualWindow w;
  const double layer = w.layer * std::pow(tr.initial.L0 / (2 * pi), 4);
  IdentityResiduals m;
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    const auto& r = tr.records[i];
    if (r.t < layer || r.K_osc < w.kosc_floor) continue;
    m.r_iii = std::max(m.r_iii, r.r_iii);
    m.r_iv = std::max(m.r_iv, r.r_iv);
    m.r_v = std::max(m.r_v, r.r_v);
    m.r_vi = std::max(m.r_vi, r.r_vi);
    m.r_vi_full = std::max(m.r_vi_full, r.r_vi_full);
  }
  return m;
}

// |h| <= (1/2pi)(int f^2)^(1-1/n)(int f^(n)^2)^(1/n) with h = -int f_x^2 / 2pi,
// for an arbitrary periodic field f standing in for the curvature.
bool h_bound_holds(const PeriodicField& f, int n) {
  const auto ds = derivatives(f, n);
  const double h = integral(ds[0] * ds[0]) / (2 * pi);
  const double dn = n;
  const double bound = std::pow(integral(f * f), 1 - 1 / dn) *
                       std::pow(integral(ds[static_cast<std::size_t>(n - 1)] * ds[static_cast<std::size_t>(n - 1)]), 1 / dn) /
                       (2 * pi);
  return holds_with_slack(h, bound);
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const auto registry = scenario_registry();

  std::map<std::string, Scenario> scenarios;
  std::map<std::string, std::future<Timed>> pending;
  for (const auto& sc : registry) {
    scenarios.emplace(sc.name, sc);
    pending[sc.name] = std::async(std::launch::async, timed_run, sc);
  }
  Scenario fine = scenarios.at("thm1_mode2");
  fine.name = "thm1_mode2_half_dt";
  fine.config.sigma *= 0.5;
  auto fine_future = std::async(std::launch::async, timed_run, fine);

  std::map<std::string, Timed> runs;
  for (auto& [name, f] : pending) runs.emplace(name, f.get());
  const Timed fine_run = fine_future.get();

  const Scenario& thm = scenarios.at("thm1_mode2");
  const ScenarioResult& main = runs.at("thm1_mode2").result;
  const auto& recs = main.trajectory.records;
  const double L0 = main.trajectory.initial.L0;

  // 1. Conservation.
  {
    double drift = 0.0, area_drop = 0.0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      drift = std::max(drift, std::abs(recs[i].L - L0) / L0);
      if (i > 0) area_drop = std::max(area_drop, (recs[i - 1].A - recs[i].A) / recs[i - 1].A);
    }
    const double k_final = recs.back().K_osc;
    const double secs = runs.at("thm1_mode2").seconds;
    const bool ok = main.trajectory.converged && k_final < 1e-10 && drift <= 1e-6 && area_drop <= 1e-10 && secs <= 300;
    verdict(1, "conservation", ok,
            fmt("K_osc_final=%.3e drift=%.3e max_area_drop=%.3e/A steps=%zu time=%.1fs", k_final, drift, area_drop,
                static_cast<std::size_t>(main.trajectory.final_state.step), secs));
  }

  // 2. Circle limit.
  {
    const auto c = check(main, thm, "circle_limit", 1e-6);
    verdict(2, "circle limit", c.holds, fmt("max radial deviation / L0 = %.3e (radius L0/2pi = %.12f)", c.observed, L0 / (2 * pi)));
  }

  // 3. Linearized decay.
  {
    const double predicted = linearized_rate(2, L0 / (2 * pi));
    const auto window = kosc_window(recs);
    const auto osc = fit_decay(recs, "osc", window);
    const auto kss = fit_decay(recs, "nkss2", window);
    const double e1 = std::abs(osc.rate - predicted) / predicted;
    const double e2 = std::abs(kss.rate - predicted) / predicted;
    verdict(3, "linearized decay", e1 <= 0.05 && e2 <= 0.05 && osc.r_squared > 0.999 && kss.r_squared > 0.999,
            fmt("predicted %.4f; osc rate %.4f (err %.2e, r2 %.6f); k_ss rate %.4f (err %.2e, r2 %.6f)", predicted,
                osc.rate, e1, osc.r_squared, kss.rate, e2, kss.r_squared));
  }

  // 4. Evolution identities, including the usual closed form for d/dt int k_ss^2.
  {
    const auto coarse = window_max(main.trajectory);
    const auto half = window_max(fine_run.result.trajectory);
    struct Row {
      const char* name;
      double c, f;
    };
    const Row rows[] = {{"int k^2", coarse.r_iii, half.r_iii},
                        {"K_osc", coarse.r_iv, half.r_iv},
                        {"int k_s^2", coarse.r_v, half.r_v},
                        {"int k_ss^2", coarse.r_vi, half.r_vi}};
    bool ok = true;
    std::string detail;
    for (const auto& r : rows) {
      const bool row_ok = r.c <= 1e-4 && r.c / r.f >= 3.5;
      ok = ok && row_ok;
      detail += fmt("%s: %.2e (x%.2f)%s; ", r.name, r.c, r.c / r.f, row_ok ? "" : " MISS");
    }
    verdict(4, "evolution identities", ok, detail);
    note(fmt("int k_ss^2 with the -2 int k_s^2 k_ss^2 and -4 int k k_ss^3 terms kept: %.2e (x%.2f on halving dt)",
             coarse.r_vi_full, coarse.r_vi_full / half.r_vi_full));
  }

  // 5. Inequality suite.
  {
    std::size_t evaluations = 0, bad = 0;
    for (const auto& [name, t] : runs) {
      evaluations += t.result.inequality_evaluations;
      bad += t.result.inequality_failures.size();
      for (const auto& f : t.result.inequality_failures) note(fmt("%s: %s lhs=%.6e rhs=%.6e", name.c_str(), f.name.c_str(), f.lhs, f.rhs));
    }
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> band(1, 60);
    std::uniform_real_distribution<double> period(0.1, 50.0), offset(-2.0, 2.0);
    std::size_t random_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      auto v = oracle::random_band_limited(rng, 128, band(rng));
      const double shift = offset(rng);
      for (auto& x : v) x += shift;
      const PeriodicField f(v, period(rng) / 128);
      bool ok = check_psw(f).holds && check_psw(derivative(f, 1)).holds;
      for (int n = 1; n <= 4; ++n) ok = ok && check_iterated_interpolation(f, n).holds && h_bound_holds(f, n);
      random_bad += ok ? 0 : 1;
    }
    const double P = 3.0;
    const auto eq = check_psw(PeriodicField::sample([&](double x) { return 0.8 * std::sin(2 * pi * x / P + 0.3); }, 128, P));
    const double eq_err = std::abs(eq.lhs_i / eq.rhs_i - 1.0);
    verdict(5, "inequality suite", bad == 0 && evaluations > 0 && random_bad == 0 && eq_err <= 1e-8,
            fmt("scenario samples %zu failures %zu; random fields 1000 failures %zu; equality case rel err %.2e",
                evaluations, bad, random_bad, eq_err));
  }

  // 6. K_osc budget.
  {
    bool ok = true;
    std::string detail;
    for (const char* name : {"thm1_mode2", "thm1_small"}) {
      const auto& r = runs.at(name).result;
      const auto& sc = scenarios.at(name);
      const auto l1 = check(r, sc, "kosc_l1");
      const auto run = check(r, sc, "kosc_running");
      const auto thr = check(r, sc, "kosc_threshold");
      ok = ok && l1.holds && run.holds && thr.holds;
      detail += fmt("%s: int K_osc dt %.4e <= %.4e, running excess %.2e, max K_osc %.4f vs 2K* %.4f (hypotheses %s); ",
                    name, l1.observed, l1.bound, run.observed, thr.observed, thr.bound,
                    r.initial.hypotheses_hold() ? "hold" : "fail");
    }
    if (!runs.at("thm1_small").result.initial.hypotheses_hold()) ok = false;
    verdict(6, "K_osc budget", ok, detail);
  }

  // 7. Constants.
  {
    const double root = solve_k_star(1);
    const double coef = ks_estimate_coefficient(root);
    const bool soft = std::abs(root - 0.09) <= 0.02;
    verdict(7, "constants", soft && std::abs(coef - 1.642) <= 0.05,
            fmt("2K*(omega=1) = %.12f (published 0.09, diff %.4f); coefficient %.6f (published 1.642)", root,
                root - 0.09, coef));
    if (std::abs(root - 0.09) > 0.005) note(fmt("warning: computed 2K* differs from the published 0.09 by %.4f", root - 0.09));
  }

  // 8. Non-convexity.
  {
    const auto& r = runs.at("nonconvex_m3").result;
    const auto& sc = scenarios.at("nonconvex_m3");
    const auto pos = check(r, sc, "nonconvex_positive");
    const auto bound = check(r, sc, "nonconvex_bound");
    const auto mech = check(r, sc, "nonconvex_mechanism");
    const double circle_bound = make_curve(CircleSpec{1.0}, 256).budget.nonconvex_bound;
    verdict(8, "non-convexity", pos.holds && bound.holds && mech.holds && circle_bound == 0.0,
            fmt("nonconvex time %.6e <= %.6e; min dA/dt on non-convex samples %.4f >= %.4f; circle bound %g",
                bound.observed, bound.bound, mech.observed, mech.bound, circle_bound));
  }

  // 9. Solitons.
  {
    double circle_worst = 0.0;
    for (const auto& c : {make_curve(CircleSpec{1.0}, 256).curve, make_curve(MultiCircleSpec{1.0, 2}, 256).curve}) {
      for (auto kind : {SolitonKind::stationary, SolitonKind::translator, SolitonKind::rotator}) {
        const auto f = soliton_residual(c, kind);
        circle_worst = std::max(circle_worst, f.residual);
        if (kind == SolitonKind::translator) circle_worst = std::max(circle_worst, norm(f.velocity));
      }
    }
    double other_least = std::numeric_limits<double>::infinity();
    std::size_t curves = 0;
    auto take = [&](const ClosedCurve& c) {
      ++curves;
      for (auto kind : {SolitonKind::stationary, SolitonKind::translator, SolitonKind::rotator})
        other_least = std::min(other_least, soliton_residual(c, kind).residual);
    };
    take(make_curve(EllipseSpec{2.0, 1.0}, 512).curve);
    for (const auto& sc : registry)
      if (!std::holds_alternative<CircleSpec>(sc.curve) && !std::holds_alternative<MultiCircleSpec>(sc.curve))
        take(runs.at(sc.name).result.initial.curve);
    verdict(9, "solitons", circle_worst <= 1e-8 && other_least > 1e-2,
            fmt("circles (omega 1, 2): worst residual or |V| %.2e; %zu non-circular curves: least residual %.4f",
                circle_worst, curves, other_least));
  }

  // 10. Embeddedness.
  {
    std::size_t samples = 0, flagged = 0;
    for (const auto& sc : registry) {
      if (sc.config.kosc_stop <= 0.0) continue;  // static cases do not converge
      const auto& r = runs.at(sc.name).result;
      if (!r.trajectory.records.front().embedded) continue;
      for (const auto& rec : r.trajectory.records) {
        ++samples;
        flagged += rec.embedded ? 0 : 1;
      }
    }
    std::mt19937_64 rng(9001);
    int mismatches = 0, simple = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = oracle::random_polygon(rng, trial);
      const bool expected = oracle::brute_force_simple(p);
      simple += expected ? 1 : 0;
      mismatches += is_embedded(ClosedCurve(p)) == expected ? 0 : 1;
    }
    verdict(10, "embeddedness", flagged == 0 && samples > 0 && mismatches == 0,
            fmt("%zu recorded samples, %zu not embedded; random curves 100 (%d simple), %d disagree with brute force",
                samples, flagged, simple, mismatches));
  }

  // 11. Displacement.
  {
    double mx = 0.0;
    for (const auto& r : recs) mx = std::max(mx, r.max_disp);
    const auto fit = fit_decay(recs, "interval_disp", TimeWindow{recs.size() > 1 ? recs[1].t : 0.0});
    verdict(11, "displacement", std::isfinite(mx) && mx < L0 && fit.rate > 0 && fit.r_squared > 0.99,
            fmt("max displacement %.6f (L0 %.4f); increment decay rate %.4f, r2 %.6f", mx, L0, fit.rate, fit.r_squared));
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
