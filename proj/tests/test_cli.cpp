#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cli_app.hpp"

using namespace lcflow;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lcflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Standard output carries JSON exactly when the exit code is 0 or 1.
void expect_contract(const Outcome& o) {
  if (o.code == 0 || o.code == 1) {
    EXPECT_TRUE(json::accept(o.out)) << o.out;
  } else {
    EXPECT_EQ(o.code, 2);
    EXPECT_TRUE(o.out.empty()) << o.out;
    EXPECT_FALSE(o.err.empty());
  }
}

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "lcflow_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_curve(const std::string& name, double a, double b, std::size_t n = 128) {
  const auto path = workdir() / name;
  std::ofstream f(path);
  f.precision(17);
  f << "x,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2 * pi * static_cast<double>(i) / static_cast<double>(n);
    f << a * std::cos(t) << ',' << b * std::sin(t) << '\n';
  }
  return path.string();
}

std::string write_text(const std::string& name, const std::string& text) {
  const auto path = workdir() / name;
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST(Cli, SolveKStar) {
  const auto o = invoke({"solve-kstar", "--omega", "1"});
  expect_contract(o);
  ASSERT_EQ(o.code, 0);
  const auto j = json::parse(o.out);
  EXPECT_EQ(j["omega"], 1);
  EXPECT_NEAR(j["two_k_star"].get<double>(), 0.10554480169639646, 1e-11);
  EXPECT_EQ(j["paper_estimate"].get<double>(), 0.09);
  EXPECT_NEAR(j["coefficient_prop43"].get<double>(), 1.642, 0.05);

  const auto o2 = invoke({"solve-kstar", "--omega", "2"});
  ASSERT_EQ(o2.code, 0);
  const auto j2 = json::parse(o2.out);
  EXPECT_LT(j2["two_k_star"].get<double>(), j["two_k_star"].get<double>());
  EXPECT_FALSE(j2.contains("paper_estimate"));

  const auto bad = invoke({"solve-kstar", "--omega", "0"});
  EXPECT_EQ(bad.code, 2);
  expect_contract(bad);
}

TEST(Cli, UsageErrors) {
  for (const auto& args : std::vector<std::vector<std::string>>{{},
                                                                 {"frobnicate"},
                                                                 {"run", "--bogus"},
                                                                 {"run", "--scenario", "no_such"},
                                                                 {"run", "--curve", "missing.csv"},
                                                                 {"verify"},
                                                                 {"verify", "--curve", "missing.csv"},
                                                                 {"solve-kstar", "--omega", "one"}}) {
    const auto o = invoke(args);
    EXPECT_EQ(o.code, 2) << (args.empty() ? "" : args[0]);
    expect_contract(o);
  }
  const auto missing = invoke({"run", "--curve", "missing.csv"});
  EXPECT_NE(missing.err.find("missing.csv"), std::string::npos);
}

TEST(Cli, HelpGoesToStdout) {
  const auto o = invoke({"--help"});
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("solve-kstar"), std::string::npos);
}

TEST(Cli, RunScenario) {
  const auto out = (workdir() / "out").string();
  const auto o = invoke({"run", "--scenario", "circle_static", "--out", out});
  expect_contract(o);
  ASSERT_EQ(o.code, 0);
  const auto j = json::parse(o.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_TRUE(fs::exists(fs::path(out) / "circle_static" / "summary.json"));
}

TEST(Cli, RunScenarioWithConfigOverride) {
  const auto cfg = write_text("override.json", R"({"max_steps": 5, "kosc_stop": 0.0})");
  const auto o = invoke({"run", "--scenario", "thm1_mode2", "--config", cfg, "--out", (workdir() / "ovr").string()});
  expect_contract(o);
  EXPECT_EQ(o.code, 1);  // cannot converge in five steps
  const auto j = json::parse(o.out);
  EXPECT_EQ(j["trajectory"]["steps"], 5);
}

TEST(Cli, RunAdHocCurve) {
  const auto curve = write_curve("adhoc.csv", 1.1, 0.95);
  const auto cfg = write_text("adhoc.json", R"({"n": 64, "t_end": 2.0})");
  const auto o = invoke({"run", "--curve", curve, "--config", cfg, "--out", (workdir() / "adhoc").string()});
  expect_contract(o);
  EXPECT_EQ(o.code, 0) << o.out;
  const auto j = json::parse(o.out);
  EXPECT_EQ(j["scenario"], "adhoc");
  EXPECT_TRUE(j["trajectory"]["converged"].get<bool>());
}

TEST(Cli, RunRejectsBadConfig) {
  const auto curve = write_curve("c1.csv", 1.0, 1.0);
  const auto o = invoke({"run", "--curve", curve, "--config", write_text("bad.json", R"({"sigma": "fast"})")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("sigma"), std::string::npos);
  expect_contract(o);
  const auto o2 = invoke({"run", "--curve", curve, "--config", write_text("bad2.json", "{not json")});
  EXPECT_EQ(o2.code, 2);
  expect_contract(o2);
  const auto o3 = invoke({"run", "--curve", curve});
  EXPECT_EQ(o3.code, 2);
  EXPECT_NE(o3.err.find("--config"), std::string::npos);
}

TEST(Cli, VerifySolitons) {
  const auto circle = write_curve("circle.csv", 1.0, 1.0);
  const auto o = invoke({"verify", "--curve", circle, "--soliton", "stationary"});
  expect_contract(o);
  ASSERT_EQ(o.code, 0);
  const auto j = json::parse(o.out);
  EXPECT_LE(j["reports"][0]["residual"].get<double>(), 1e-8);

  const auto ell = write_curve("ellipse.csv", 2.0, 1.0, 512);
  const auto e = invoke({"verify", "--curve", ell, "--soliton", "stationary"});
  expect_contract(e);
  EXPECT_EQ(e.code, 1);
  EXPECT_GT(json::parse(e.out)["reports"][0]["residual"].get<double>(), 0.1);

  EXPECT_EQ(invoke({"verify", "--curve", circle, "--soliton", "spiral"}).code, 2);
}

TEST(Cli, VerifyInequalities) {
  const auto ell = write_curve("ellipse2.csv", 1.5, 1.0, 256);
  const auto o = invoke({"verify", "--curve", ell, "--psw", "--interp", "3", "--hbound", "2"});
  expect_contract(o);
  EXPECT_EQ(o.code, 0);
  const auto j = json::parse(o.out);
  EXPECT_EQ(j["reports"].size(), 6u);
  for (const auto& r : j["reports"]) EXPECT_TRUE(r["holds"].get<bool>()) << r["name"];
  EXPECT_EQ(invoke({"verify", "--curve", ell, "--interp", "5"}).code, 2);
  const auto all = invoke({"verify", "--curve", ell});
  EXPECT_EQ(all.code, 0);
  EXPECT_EQ(json::parse(all.out)["reports"].size(), 12u);
}

TEST(Cli, SolitonCommand) {
  const auto circle = write_curve("circle2.csv", 2.0, 2.0, 64);
  const auto o = invoke({"soliton", "--curve", circle});
  expect_contract(o);
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(json::parse(o.out)["reports"].size(), 3u);
  const auto ell = write_curve("ellipse3.csv", 2.0, 1.0, 256);
  EXPECT_EQ(invoke({"soliton", "--curve", ell, "--kind", "translator"}).code, 1);
}

TEST(Cli, SweepRunsConcurrently) {
  const auto o = invoke({"sweep", "--scenario", "circle_static", "--scenario", "double_circle", "--out",
                      (workdir() / "sweep").string()});
  expect_contract(o);
  EXPECT_EQ(o.code, 0);
  const auto j = json::parse(o.out);
  ASSERT_EQ(j["results"].size(), 2u);
  EXPECT_EQ(j["results"][0]["scenario"], "circle_static");
  EXPECT_EQ(j["results"][1]["scenario"], "double_circle");
  EXPECT_EQ(invoke({"sweep", "--scenario", "nope"}).code, 2);
}
