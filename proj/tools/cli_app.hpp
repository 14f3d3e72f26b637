#pragma once

// Command-line front end. JSON goes to `out` for exit codes 0 and 1; usage
// and input errors (exit 2) write plain text to `err` only.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>
#include "lcflow/curve.hpp"
#include "lcflow/diagnostics.hpp"
#include "lcflow/periodic_calculus.hpp"
#include "lcflow/scenarios.hpp"

namespace lcflow::cli {

enum ExitCode : int { kOk = 0, kAssertionFailed = 1, kUsage = 2 };

/// Input problems that map to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::vector<Vec2> read_points(const std::string& path) {
  try {
    return read_curve_csv(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

/// Node count for a curve read from disk: its own count, rounded up to even
/// and at least the minimum.
inline std::size_t working_nodes(std::size_t count) {
  std::size_t n = std::max(count, kMinNodes);
  return n + (n % 2);
}

// Ad-hoc runs assert the properties that hold for any omega = 1 trajectory.
inline std::vector<Assertion> adhoc_assertions() {
  return {{"length_drift", 1e-6}, {"area_monotone", 1e-10}, {"kosc_l1", 0},      {"kosc_running", 0},
          {"kosc_threshold", 0},  {"nonconvex_bound", 0},   {"inequalities", 0}};
}

inline int cmd_run(const std::optional<std::string>& scenario, const std::optional<std::string>& curve_path,
                   const std::optional<std::string>& config_path, const std::string& out_dir, bool svg,
                   std::ostream& out) {
  Scenario sc;
  if (scenario) {
    auto found = find_scenario(*scenario);
    if (!found) {
      std::string names;
      for (const auto& n : scenario_names()) names += " " + n;
      throw UsageError("unknown scenario '" + *scenario + "'; known:" + names);
    }
    sc = *found;
    if (config_path) {
      try {
        apply_config_json(sc.config, read_json_file(*config_path));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  } else {
    if (!curve_path) throw UsageError("run: need --scenario, or both --curve and --config");
    auto pts = read_points(*curve_path);
    if (!config_path) throw UsageError("run: --config is required with --curve");
    FlowConfig cfg;
    try {
      apply_config_json(cfg, read_json_file(*config_path));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    sc = Scenario{std::filesystem::path(*curve_path).stem().string(), PointsSpec{std::move(pts)}, cfg, false,
                  adhoc_assertions()};
  }

  std::optional<InitialCurve> initial;
  try {
    initial = make_curve(sc.curve, sc.config.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!scenario) sc.expect_hypotheses = initial->hypotheses_hold();
  const ScenarioResult res = run_scenario(sc, RunOptions{out_dir, svg});
  out << summary_json(sc, res).dump(2) << '\n';
  return res.passed ? kOk : kAssertionFailed;
}

inline json soliton_report(const ClosedCurve& curve, SolitonKind kind, double tol) {
  const auto fit = soliton_residual(curve, kind);
  json r = {{"name", "soliton_" + to_string(kind)}, {"residual", fit.residual}, {"tolerance", tol}};
  if (kind == SolitonKind::translator) r["velocity"] = {fit.velocity.x, fit.velocity.y};
  if (kind == SolitonKind::rotator) r["angular"] = fit.angular;
  r["holds"] = fit.residual <= tol;
  return r;
}

inline int cmd_verify(const std::string& curve_path, bool psw, std::optional<int> interp, std::optional<int> hbound,
                      std::optional<std::string> soliton, std::ostream& out) {
  const auto pts = read_points(curve_path);
  std::optional<ClosedCurve> curve;
  try {
    curve.emplace(resample_by_arclength(pts, working_nodes(pts.size())));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::optional<SolitonKind> kind;
  if (soliton) {
    try {
      kind = parse_soliton_kind(*soliton);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if ((interp && (*interp < 1 || *interp > 4)) || (hbound && (*hbound < 1 || *hbound > 4)))
    throw UsageError("verify: --interp and --hbound take n in [1, 4]");
  if (curve->winding() == 0 && (hbound || kind)) throw UsageError("verify: winding number is zero; h is undefined");

  const bool none = !psw && !interp && !hbound && !kind;
  const GeometryCache g = geometry(*curve);
  json reports = json::array();
  bool holds = true;
  auto add = [&](const InequalityReport& r) {
    reports.push_back(to_json(r));
    holds = holds && r.holds;
  };
  if (psw || none) {
    for (auto r : check_psw(g.k).reports()) {
      r.name += "_k";
      add(r);
    }
    for (auto r : check_psw(g.k_s()).reports()) {
      r.name += "_ks";
      add(r);
    }
  }
  if (interp) add(check_iterated_interpolation(g.k, *interp));
  if (none)
    for (int n = 1; n <= 4; ++n) add(check_iterated_interpolation(g.k, n));
  if (hbound) add(check_h_bound(g, *hbound));
  if (none && g.winding != 0)
    for (int n = 1; n <= 4; ++n) add(check_h_bound(g, n));
  if (kind) {
    auto r = soliton_report(*curve, *kind, 1e-8);
    holds = holds && r["holds"].get<bool>();
    reports.push_back(std::move(r));
  }
  out << json{{"curve",
               {{"file", curve_path},
                {"nodes", curve->size()},
                {"length", g.length},
                {"area", g.area},
                {"winding", g.winding},
                {"K_osc", k_osc(g)},
                {"I", isoperimetric_ratio(g.length, g.area)}}},
              {"reports", reports},
              {"holds", holds}}
             .dump(2)
      << '\n';
  return holds ? kOk : kAssertionFailed;
}

inline int cmd_solve_kstar(int omega, std::ostream& out, std::ostream& err) {
  if (omega < 1) throw UsageError("solve-kstar: --omega must be an integer >= 1");
  const double root = solve_k_star(omega);
  const double coeff = ks_estimate_coefficient(root);
  json j = {{"omega", omega}, {"two_k_star", root}};
  if (omega == 1) {
    constexpr double estimate = 0.09;
    j["paper_estimate"] = estimate;
    if (std::abs(root - estimate) > 0.02)
      err << "warning: two_k_star = " << root << " differs from the estimate " << estimate << " by more than 0.02\n";
  }
  j["coefficient_prop43"] = coeff;
  if (omega == 1 && std::abs(coeff - 1.642) > 0.05)
    err << "warning: coefficient " << coeff << " differs from 1.642 by more than 0.05\n";
  out << j.dump(2) << '\n';
  return kOk;
}

inline int cmd_soliton(const std::string& curve_path, const std::vector<std::string>& kinds, double tol,
                       std::ostream& out) {
  const auto pts = read_points(curve_path);
  std::optional<ClosedCurve> curve;
  try {
    curve.emplace(resample_by_arclength(pts, working_nodes(pts.size())));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (curve->winding() == 0) throw UsageError("soliton: winding number is zero; h is undefined");
  std::vector<SolitonKind> list;
  try {
    for (const auto& k : kinds) list.push_back(parse_soliton_kind(k));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (list.empty()) list = {SolitonKind::stationary, SolitonKind::translator, SolitonKind::rotator};
  json reports = json::array();
  bool holds = true;
  for (auto k : list) {
    reports.push_back(soliton_report(*curve, k, tol));
    holds = holds && reports.back()["holds"].get<bool>();
  }
  out << json{{"curve", curve_path}, {"reports", reports}, {"holds", holds}}.dump(2) << '\n';
  return holds ? kOk : kAssertionFailed;
}

inline int cmd_sweep(std::vector<std::string> names, const std::string& out_dir, bool svg, std::ostream& out) {
  if (names.empty()) names = scenario_names();
  std::vector<Scenario> list;
  for (const auto& n : names) {
    auto sc = find_scenario(n);
    if (!sc) throw UsageError("unknown scenario '" + n + "'");
    list.push_back(*sc);
  }
  std::vector<std::future<json>> jobs;
  for (const auto& sc : list) {
    jobs.push_back(std::async(std::launch::async, [sc, out_dir, svg] {
      const auto res = run_scenario(sc, RunOptions{out_dir, svg});
      return summary_json(sc, res);
    }));
  }
  json results = json::array();
  bool passed = true;
  for (auto& j : jobs) {
    json s = j.get();
    passed = passed && s["passed"].get<bool>();
    results.push_back(std::move(s));
  }
  out << json{{"passed", passed}, {"results", results}}.dump(2) << '\n';
  return passed ? kOk : kAssertionFailed;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Length-constrained curve diffusion: simulation and verification"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a named scenario or an ad-hoc curve");
  std::optional<std::string> scenario, curve_path, config_path;
  std::string out_dir = "out";
  bool svg = false;
  run->add_option("--scenario", scenario, "Scenario name");
  run->add_option("--curve", curve_path, "Curve CSV (header x,y)");
  run->add_option("--config", config_path, "Flow config JSON; overrides the scenario config when both are given");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--svg", svg, "Also write SVG snapshots");

  auto* verify = app.add_subcommand("verify", "Static inequality and soliton checks on one curve");
  std::string verify_curve;
  bool psw = false;
  std::optional<int> interp, hbound;
  std::optional<std::string> soliton;
  verify->add_option("--curve", verify_curve, "Curve CSV")->required();
  verify->add_flag("--psw", psw, "Wirtinger inequalities for k and k_s");
  verify->add_option("--interp", interp, "Iterated interpolation inequality, n in [1, 4]");
  verify->add_option("--hbound", hbound, "Bound on |h|, n in [1, 4]");
  verify->add_option("--soliton", soliton, "stationary | translator | rotator");

  auto* kstar = app.add_subcommand("solve-kstar", "Oscillation threshold 2K* for a winding number");
  int omega = 1;
  kstar->add_option("--omega", omega, "Winding number >= 1");

  auto* sol = app.add_subcommand("soliton", "Soliton residuals of one curve");
  std::string sol_curve;
  std::vector<std::string> kinds;
  double sol_tol = 1e-8;
  sol->add_option("--curve", sol_curve, "Curve CSV")->required();
  sol->add_option("--kind", kinds, "stationary | translator | rotator (repeatable; default all)");
  sol->add_option("--tol", sol_tol, "Residual below which the curve counts as a soliton");

  auto* sweep = app.add_subcommand("sweep", "Run several scenarios concurrently");
  std::vector<std::string> sweep_names;
  std::string sweep_out = "out";
  bool sweep_svg = false;
  sweep->add_option("--scenario", sweep_names, "Scenario name (repeatable; default all)");
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_flag("--svg", sweep_svg, "Also write SVG snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*run) return cmd_run(scenario, curve_path, config_path, out_dir, svg, out);
    if (*verify) return cmd_verify(verify_curve, psw, interp, hbound, soliton, out);
    if (*kstar) return cmd_solve_kstar(omega, out, err);
    if (*sol) return cmd_soliton(sol_curve, kinds, sol_tol, out);
    if (*sweep) return cmd_sweep(sweep_names, sweep_out, sweep_svg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace lcflow::cli
