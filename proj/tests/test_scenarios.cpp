#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lcflow/scenarios.hpp"
#include "oracles.hpp"

using namespace lcflow;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("lcflow_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(MakeCurve, Circle) {
  const auto c = make_curve(CircleSpec{1.0}, 256);
  EXPECT_EQ(c.curve.size(), 256u);
  EXPECT_LE(c.K_osc0(), 1e-20);
  EXPECT_NEAR(c.I0(), 1.0, 1e-14);
  EXPECT_TRUE(c.hypotheses_hold());
}

TEST(MakeCurve, FourierCircleMatchesOracle) {
  const auto c = make_curve(FourierCircleSpec{1.0, {{2, 0.05, 0.0}}}, 256);
  const auto ref = oracle::polar_integrals(oracle::fourier_polar(0.05, 2), 4096);
  EXPECT_NEAR(c.K_osc0() / ref.k_osc, 1.0, 1e-4);
  EXPECT_NEAR(c.K_osc0(), 0.446652852171, 1e-10);
  EXPECT_NEAR(c.I0(), 1.003745322233, 1e-11);
  // K* is about 0.053, far below K_osc(0).
  EXPECT_FALSE(c.hypotheses_hold());
}

TEST(MakeCurve, CounterclockwiseAndUniform) {
  const auto c = make_curve(EllipseSpec{2.0, 1.0}, 256);
  EXPECT_EQ(c.curve.winding(), 1);
  EXPECT_GT(geometry(c.curve).area, 0.0);
  EXPECT_NEAR(c.curve.length(), oracle::ellipse_perimeter(2.0, 1.0), 1e-9);
}

TEST(MakeCurve, DoubleCircle) {
  const auto c = make_curve(MultiCircleSpec{1.0, 2}, 256);
  EXPECT_EQ(c.curve.winding(), 2);
  EXPECT_NEAR(integral(geometry(c.curve).k), 4 * pi, 1e-10);
  EXPECT_FALSE(c.hypotheses_hold());
}

TEST(MakeCurve, Rejections) {
  // rho changes sign.
  try {
    make_curve(FourierCircleSpec{1.0, {{3, 1.2, 0.0}}}, 256);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("theta"), std::string::npos);
  }
  // Nearly a cusp: rho stays positive but curvature blows up.
  try {
    make_curve(FourierCircleSpec{1.0, {{1, 0.99999, 0.0}}}, 64);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("curvature"), std::string::npos);
  }
  EXPECT_THROW(make_curve(CircleSpec{-1.0}, 64), std::invalid_argument);
  EXPECT_THROW(make_curve(EllipseSpec{2.0, 0.0}, 64), std::invalid_argument);
  EXPECT_THROW(make_curve(MultiCircleSpec{1.0, 0}, 64), std::invalid_argument);
  EXPECT_THROW(make_curve(CircleSpec{1.0}, 65), std::invalid_argument);
}

TEST(MakeCurve, Deterministic) {
  const FourierCircleSpec spec{1.0, {{2, 0.03, 0.0}, {3, 0.02, 0.7}}};
  const auto a = make_curve(spec, 128);
  const auto b = make_curve(spec, 128);
  for (std::size_t i = 0; i < 128; ++i) EXPECT_EQ(a.curve[i], b.curve[i]);
}

TEST(ConfigJson, OverridesAndRejections) {
  FlowConfig cfg;
  apply_config_json(cfg, json::parse(R"({"n": 128, "sigma": 0.1, "h_mode": "continuum", "rescale": false})"));
  EXPECT_EQ(cfg.n, 128u);
  EXPECT_DOUBLE_EQ(cfg.sigma, 0.1);
  EXPECT_EQ(cfg.h_mode, HMode::continuum);
  EXPECT_FALSE(cfg.rescale);

  auto message = [](const std::string& text) {
    FlowConfig c;
    try {
      apply_config_json(c, json::parse(text));
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"sigmaa": 0.1})").find("sigmaa"), std::string::npos);
  EXPECT_NE(message(R"({"n": "big"})").find("'n'"), std::string::npos);
  EXPECT_NE(message(R"({"sigma": 0.5})").find("sigma"), std::string::npos);
  EXPECT_NE(message(R"({"h_mode": "fast"})").find("h_mode"), std::string::npos);
  EXPECT_NE(message("[1, 2]"), "");
}

TEST(ConfigJson, RoundTrip) {
  FlowConfig cfg;
  cfg.n = 64;
  cfg.kosc_stop = 1e-8;
  cfg.snapshot_every = 7;
  FlowConfig back;
  apply_config_json(back, config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Registry, WellFormed) {
  const auto names = scenario_names();
  const std::set<std::string> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), names.size());
  for (const char* required : {"thm1_mode2", "circle_static", "nonconvex_m3"}) EXPECT_TRUE(unique.count(required));
  const auto known = known_checks();
  for (const auto& sc : scenario_registry()) {
    EXPECT_NO_THROW(sc.config.validate()) << sc.name;
    for (const auto& a : sc.assertions)
      EXPECT_NE(std::find(known.begin(), known.end(), a.check), known.end()) << sc.name << ": " << a.check;
    EXPECT_TRUE(std::any_of(sc.assertions.begin(), sc.assertions.end(),
                            [](const Assertion& a) { return a.check == "hypotheses"; }))
        << sc.name;
    const auto init = make_curve(sc.curve, sc.config.n);
    EXPECT_EQ(init.hypotheses_hold(), sc.expect_hypotheses) << sc.name;
  }
  EXPECT_FALSE(find_scenario("no_such").has_value());
}

TEST(RunScenario, CircleStaticOutputs) {
  const auto dir = scratch("circle");
  auto sc = *find_scenario("circle_static");
  sc.config.snapshot_every = 2;
  const auto res = run_scenario(sc, RunOptions{dir, true});
  EXPECT_TRUE(res.passed);
  for (const auto& c : res.checks) EXPECT_TRUE(c.holds) << c.check;
  const auto base = dir / "circle_static";
  ASSERT_TRUE(fs::exists(base / "diagnostics.csv"));
  ASSERT_TRUE(fs::exists(base / "summary.json"));
  EXPECT_TRUE(fs::exists(base / "curve_0.csv"));
  EXPECT_TRUE(fs::exists(base / "snapshot_0.svg"));
  const long last = res.trajectory.final_state.step;
  EXPECT_TRUE(fs::exists(base / ("curve_" + std::to_string(last) + ".csv")));

  std::ifstream csv(base / "diagnostics.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,L,A,I,kbar,K_osc,h,nk2,nks2,nkss2,nks32,min_k,embedded,max_disp,r_iii,r_v,r_vi");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 16);
  }
  EXPECT_EQ(rows, res.trajectory.records.size());

  const auto summary = json::parse(slurp(base / "summary.json"));
  EXPECT_EQ(summary["scenario"], "circle_static");
  EXPECT_TRUE(summary["passed"].get<bool>());
  for (const auto& c : summary["checks"]) {
    EXPECT_TRUE(c.contains("check") && c.contains("bound") && c.contains("observed") && c.contains("holds"));
  }
  const auto pts = read_curve_csv((base / "curve_0.csv").string());
  EXPECT_EQ(pts.size(), sc.config.n);
  const std::string svg = slurp(base / "snapshot_0.svg");
  EXPECT_NE(svg.find("fill=\"none\""), std::string::npos);
  EXPECT_NE(svg.find("Z\""), std::string::npos);
}

TEST(RunScenario, BitIdenticalReruns) {
  auto sc = *find_scenario("mixed_modes");
  sc.config.max_steps = 150;
  const auto d1 = scratch("rerun1"), d2 = scratch("rerun2");
  run_scenario(sc, RunOptions{d1, false});
  run_scenario(sc, RunOptions{d2, false});
  EXPECT_EQ(slurp(d1 / sc.name / "diagnostics.csv"), slurp(d2 / sc.name / "diagnostics.csv"));
  EXPECT_EQ(slurp(d1 / sc.name / "summary.json"), slurp(d2 / sc.name / "summary.json"));
}

TEST(RunScenario, Thm1Mode2AllChecksGreen) {
  const auto res = run_scenario(*find_scenario("thm1_mode2"));
  for (const auto& c : res.checks) EXPECT_TRUE(c.holds) << c.check << " observed " << c.observed << " bound " << c.bound;
  EXPECT_TRUE(res.passed);
  EXPECT_TRUE(res.trajectory.converged);
  EXPECT_EQ(res.inequality_failures.size(), 0u);
  EXPECT_EQ(res.inequality_evaluations, res.trajectory.records.size());
}

TEST(RunScenario, FailingAssertionIsReported) {
  auto sc = *find_scenario("thm1_mode2");
  sc.config.max_steps = 20;
  sc.assertions = {{"converged", 0.0}};
  const auto res = run_scenario(sc);
  EXPECT_FALSE(res.passed);
  EXPECT_FALSE(res.checks.front().holds);
}

TEST(Svg, FixedViewportClosedPath) {
  const auto c = make_curve(CircleSpec{2.0}, 32).curve;
  std::ostringstream out;
  write_svg(out, c, Viewport{0.0, 0.0, 3.0});
  const auto s = out.str();
  EXPECT_NE(s.find("viewBox=\"-3 -3 6 6\""), std::string::npos);
  EXPECT_NE(s.find("stroke=\"black\""), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), 'L'), 31);
}
