#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "hjmm/cli.hpp"

using namespace hjmm;

#ifndef HJMM_SCENARIO_DIR
#define HJMM_SCENARIO_DIR "scenarios"
#endif

namespace {

ScenarioConfig parse(const std::string& text, const std::vector<std::string>& over = {}) {
  std::istringstream in(text);
  return parse_config(in, over);
}

std::string scenario(const std::string& name) { return std::string(HJMM_SCENARIO_DIR) + "/" + name; }

std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hjmm_test_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

const char* kSmall = R"(
[grid]
xi_max = 10
n_points = 101   # step 0.1
[time]
t_max = 0.5
dt = 0.1
[wiener]
count = 1
sigma.1 = vasicek:0.02,0.1
[jumps]
count = 1
comp.1 = table:{-1:0.5, 0.5:1.0}:compensated
gamma.1 = constant:0.01
[mpr]
theta = const:0.2
psi = const_y
y_samples = 0, 0.1
y0 = 0.1
[mc]
paths = 40
seed = 9
[report]
maturities = 1, 3
)";

}  // namespace

TEST(Config, ParsesAllSections) {
  auto c = parse(kSmall);
  EXPECT_EQ(c.n_points, 101);
  EXPECT_EQ(c.wiener_count, 1);
  ASSERT_EQ(c.components.size(), 1u);
  EXPECT_TRUE(c.components[0].compensated);
  EXPECT_EQ(c.components[0].table.size(), 2u);
  EXPECT_EQ(c.mpr.psi_kind, MprFamily::PsiKind::constant_in_x);
  EXPECT_EQ(c.mpr.theta_const, std::vector<double>{0.2});
  EXPECT_EQ(c.maturities, (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_NO_THROW(c.model());
}

TEST(Config, ProductAndExpPsiSpecs) {
  auto c = parse("[mpr]\npsi = product:const:0.2:linear:2\n");
  EXPECT_EQ(c.mpr.psi_kind, MprFamily::PsiKind::product_form);
  EXPECT_EQ(c.mpr.xi_map.kind, XiMapSpec::Kind::linear);
  EXPECT_EQ(c.mpr.xi_map.c, 2.0);
  auto e = parse("[mpr]\npsi = exp:sqrt:0.5\n");
  EXPECT_EQ(e.mpr.vartheta.kind, VarthetaSpec::Kind::sqrt_);
}

TEST(Config, ErrorsCarryLineAndKey) {
  try {
    parse("[grid]\nxi_max = 10\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("grid.bogus"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("[grid]\nxi_max = ten\n"), ConfigError);
  EXPECT_THROW(parse("[grid]\nxi_max = 10\nxi_max = 11\n"), ConfigError);
  EXPECT_THROW(parse("xi_max = 10\n"), ConfigError);
  EXPECT_THROW(parse("[wiener]\ncount = 1\n"), ConfigError);  // missing sigma.1
  EXPECT_THROW(parse("[wiener]\ncount = 1\nsigma.2 = constant:0.1\nsigma.1 = constant:0.1\n"), ConfigError);
  EXPECT_THROW(parse("[jumps]\ncount = 1\ncomp.1 = table:{1:0}\ngamma.1 = constant:0.1\n"), ConfigError);
  EXPECT_THROW(parse("[mpr]\ny_samples = 0.1, 0.2\n"), ConfigError);  // y* missing
  EXPECT_THROW(parse("[mpr]\nstate = bessel\n"), ConfigError);       // y0 missing
}

TEST(Config, OverridesAndHash) {
  auto a = parse(kSmall), b = parse(kSmall);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  auto c = parse(kSmall, {"mc.paths=41"});
  EXPECT_EQ(c.paths, 41);
  EXPECT_NE(c.hash(), a.hash());
  EXPECT_THROW(parse(kSmall, {"mc.nothing=1"}), ConfigError);
  EXPECT_THROW(parse(kSmall, {"mc.paths"}), ConfigError);
}

TEST(Cli, SimulateIsReproducible) {
  auto cfg = parse(kSmall);
  std::string d1 = temp_dir("sim1"), d2 = temp_dir("sim2");
  EXPECT_EQ(cli::run("simulate", cfg, {d1, 1}), 0);
  EXPECT_EQ(cli::run("simulate", cfg, {d2, 2}), 0);
  std::string a = strip_timestamp(d1 + "/simulate.csv"), b = strip_timestamp(d2 + "/simulate.csv");
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("# config_hash: " + cfg.hash()), std::string::npos);
  EXPECT_NE(a.find("time,path_id,R,B,GOP,Z,P(1),P(3),benchmarked(1),benchmarked(3)"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  std::string d = temp_dir("codes");
  std::ostringstream err;
  EXPECT_EQ(cli::run("invariance", scenario("realization_positive.cfg"), {}, {d}, err), 0);
  EXPECT_EQ(cli::run("invariance", scenario("realization_negative.cfg"), {}, {d}, err), 2);
  EXPECT_EQ(cli::run("simulate", scenario("missing.cfg"), {}, {d}, err), 1);
  EXPECT_EQ(cli::run("teleport", scenario("realization_positive.cfg"), {}, {d}, err), 1);
  EXPECT_EQ(cli::run("simulate", scenario("vasicek_table.cfg"), {"grid.nope=1"}, {d}, err), 1);
  EXPECT_NE(err.str().find("grid.nope"), std::string::npos);
}

TEST(Cli, OraclesOnDefaults) {
  std::string d = temp_dir("oracles");
  EXPECT_EQ(cli::run("oracles", "", {}, {d}), 0);
  std::string s = strip_timestamp(d + "/oracles.csv");
  EXPECT_NE(s.find("vandermonde_vs_rank,100,0,"), std::string::npos) << s;
  EXPECT_NE(s.find("laplace_distinct,100,0,"), std::string::npos) << s;
  EXPECT_NE(s.find("laplace_equal,100,0,"), std::string::npos) << s;
}

TEST(Cli, RankReportCarriesCaveat) {
  std::string d = temp_dir("rank");
  EXPECT_EQ(cli::run("rank", scenario("table_plateau.cfg"), {}, {d}), 0);
  std::string s = strip_timestamp(d + "/rank.csv");
  EXPECT_NE(s.find(kRankCaveat), std::string::npos);
  EXPECT_NE(s.find("scenario,span,samples,tol,rank,singular_values"), std::string::npos);
}

TEST(Report, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(fmt(v)), v);
  EXPECT_EQ(fmt(std::nan("")), "nan");
}
