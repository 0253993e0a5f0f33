#include <gtest/gtest.h>

#include <cmath>

#include "hjmm/hjmm_sim.hpp"

using namespace hjmm;

namespace {

ModelSpec wiener_only(const GridPtr& g, QuasiExponentialSpec s) {
  ModelSpec m;
  m.grid = g;
  m.sigma = {s};
  m.drivers = {1, {}};
  return m;
}

ModelSpec vasicek_table(const GridPtr& g, double gamma0) {
  ModelSpec m;
  m.grid = g;
  m.sigma = {QuasiExponentialSpec::vasicek(0.02, 0.1)};
  m.gamma = {QuasiExponentialSpec::constant(gamma0)};
  m.drivers = {1, {LevyComponentSpec::jump_table({{-1.0, 0.5}, {0.5, 1.0}, {2.0, 0.25}})}};
  return m;
}

double node_value(const ForwardCurve& c, double xi) {
  long k;
  EXPECT_TRUE(on_grid_shift(*c.grid, xi, &k));
  return c.values[k];
}

}  // namespace

TEST(Drift, ZeroVolatilitiesGiveZeroDrift) {
  auto g = make_grid();
  auto m = wiener_only(g, QuasiExponentialSpec::constant(0.0));
  EXPECT_EQ(alpha(m, ForwardCurve::constant(g, 0.03), 0.0).values, Vec::Zero(g->size()));
  auto pc = drift_potential_check(m, ForwardCurve::constant(g, 0.03));
  EXPECT_EQ(pc.max_residual, 0.0);
}

TEST(Drift, ConstantVolatility) {
  auto g = make_grid();
  auto m = wiener_only(g, QuasiExponentialSpec::constant(0.02));
  auto a = alpha(m, ForwardCurve::zero(g), 0.0);
  EXPECT_NEAR(node_value(a, 2.0), 0.0008, 1e-15);
}

TEST(Drift, VasicekClosedForm) {
  auto g = make_grid(30.0, 6001);
  auto m = wiener_only(g, QuasiExponentialSpec::vasicek(0.02, 0.1));
  auto a = alpha_risk_neutral(m, ForwardCurve::zero(g));
  EXPECT_EQ(a.values, alpha(m, ForwardCurve::zero(g), m.mpr.y_star).values);
  double exact = 0.0004 * std::exp(-0.1) * (1.0 - std::exp(-0.1)) / 0.1;
  EXPECT_NEAR(exact, 3.4442666e-4, 1e-11);
  EXPECT_NEAR(node_value(a, 1.0), exact, 1e-9);
}

TEST(Drift, JumpTermMatchesCumulantIdentity) {
  auto g = make_grid();
  ModelSpec m;
  m.grid = g;
  m.gamma = {QuasiExponentialSpec::constant(0.05)};
  m.drivers = {0, {LevyComponentSpec::jump_table({{-1.0, 0.5}, {0.5, 1.0}, {2.0, 0.25}})}};
  auto a = alpha(m, ForwardCurve::zero(g), 0.0);
  auto G = integrated_vol(ForwardCurve::constant(g, 0.05));
  for (int i = 0; i < g->size(); ++i) {
    double direct = 0.0;
    for (const auto& at : m.drivers.components[0].table) direct += at.rho * at.x * std::exp(at.x * G.values[i]);
    EXPECT_NEAR(a.values[i], -0.05 * direct, 1e-12);
    EXPECT_NEAR(a.values[i], -0.05 * cumulant_deriv(m.drivers.components[0], G.values[i], 1), 1e-12);
  }
}

TEST(Drift, CompensatedTableVanishesAtZeroGamma) {
  auto spec = LevyComponentSpec::jump_table({{-1.0, 0.5}, {0.5, 1.0}}, true);
  ModelSpec m;
  m.grid = make_grid();
  m.gamma = {QuasiExponentialSpec::constant(0.05)};
  m.drivers = {0, {spec}};
  EXPECT_NEAR(jump_drift_integral(m, 0, 0.0, 0.0), 0.0, 1e-16);
}

TEST(Drift, PotentialIdentityConvergesAtSecondOrder) {
  auto run = [](int n) {
    auto g = make_grid(30.0, n);
    auto m = vasicek_table(g, 0.01);
    return drift_potential_check(m, ForwardCurve::constant(g, 0.03)).max_residual;
  };
  double r1 = run(601), r2 = run(1201), r3 = run(2401);
  EXPECT_LE(r1, 1e-6);
  EXPECT_GE(std::log2(r1 / r2), 1.8);
  EXPECT_GE(std::log2(r2 / r3), 1.8);
}

TEST(BondPrice, ClosedForms) {
  auto g = make_grid();
  EXPECT_EQ(bond_price(ForwardCurve::constant(g, 0.03), 0.0), 1.0);
  EXPECT_NEAR(bond_price(ForwardCurve::constant(g, 0.03), 2.0), std::exp(-0.06), 1e-15);
  EXPECT_NEAR(std::exp(-0.06), 0.941765, 5e-7);
  auto h = ForwardCurve::from(g, [](double x) { return 0.05 * std::exp(-x); });
  EXPECT_NEAR(bond_price(h, 1.0), std::exp(-0.05 * (1.0 - std::exp(-1.0))), 1e-8);
  EXPECT_NEAR(bond_price(h, 1.013), std::exp(-0.05 * (1.0 - std::exp(-1.013))), 1e-8);
  EXPECT_THROW(bond_price(h, 31.0), DomainError);
  EXPECT_THROW(bond_price(h, -1.0), DomainError);
}

TEST(Step, ZeroNoiseIsPureShift) {
  auto g = make_grid(10.0, 201);
  auto m = wiener_only(g, QuasiExponentialSpec::constant(0.0));
  auto h = ForwardCurve::from(g, [](double x) { return 0.03 + 0.01 * x; });
  auto r = step(m, h, 0.0, 0.05, StepIncrement{{0.3}, {}, {}});
  EXPECT_EQ(r.values, shift(h, 0.05).values);
}

TEST(Step, JumpEntersLinearly) {
  auto g = make_grid(10.0, 201);
  auto m = vasicek_table(g, 0.01);
  auto h = ForwardCurve::constant(g, 0.03);
  StepIncrement quiet{{0.0}, {0.0}, {{}}}, jump{{0.0}, {2.0}, {{2.0}}};
  auto a = step(m, h, 0.0, 0.05, quiet), b = step(m, h, 0.0, 0.05, jump);
  auto expect = shift(ForwardCurve{g, 2.0 * m.gamma[0].eval(h).values}, 0.05);
  EXPECT_LT((b.values - a.values - expect.values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Simulate, DeterministicModel) {
  auto g = make_grid(10.0, 201);
  auto m = wiener_only(g, QuasiExponentialSpec::constant(0.0));
  SimOptions o;
  o.t_max = 1.0;
  o.dt = 0.05;
  o.n_paths = 30;
  o.maturities = {3.0};
  auto paths = simulate(m, ForwardCurve::constant(g, 0.03), o);
  const auto& p = paths[0];
  for (size_t j = 0; j < p.times.size(); ++j) {
    double t = p.times[j];
    EXPECT_NEAR(p.bonds[j][0], std::exp(-0.03 * (3.0 - t)), 1e-14);
    EXPECT_NEAR(p.B[j], std::exp(0.03 * t), 1e-14);
    EXPECT_NEAR(p.gop[j], p.B[j], 1e-14);
    EXPECT_EQ(p.Z[j], 1.0);
  }
  auto s = martingale_statistic(paths, Quantity::density, 1.0);
  EXPECT_EQ(s.z, 0.0);
  EXPECT_THROW(martingale_statistic(std::vector<SimulationPath>(paths.begin(), paths.begin() + 10), Quantity::density, 1.0),
               UnderpoweredError);
}

TEST(Simulate, StrongConvergenceOfTerminalCurve) {
  // Wiener-only Vasicek; dt, dt/2 and the dt/4 reference share one Brownian path
  auto g = make_grid(10.0, 401);  // step 0.025
  auto m = wiener_only(g, QuasiExponentialSpec::vasicek(0.02, 0.1));
  auto h0 = ForwardCurve::constant(g, 0.03);
  const double dt_ref = 0.025;
  const int n_ref = 40, paths = 20;
  double e1 = 0.0, e2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    auto inc = sample_increments(m.drivers, dt_ref, n_ref, 500 + p);
    auto run = [&](int group) {
      ForwardCurve r = h0;
      for (int i = 0; i < n_ref; i += group) {
        StepIncrement s{{0.0}, {}, {}};
        for (int j = 0; j < group; ++j) s.dW[0] += inc[i + j].dW[0];
        r = step(m, r, 0.0, dt_ref * group, s);
      }
      return r;
    };
    auto ref = run(1);
    e1 += h_norm(run(4) - ref) / paths;
    e2 += h_norm(run(2) - ref) / paths;
  }
  // dt -> dt/2 against the dt/4 reference: error ratio 3 for a first-order scheme
  EXPECT_GT(e1 / e2, 1.8);
}

TEST(Simulate, SeedsAndThreadsDoNotChangePaths) {
  auto g = make_grid(10.0, 201);
  auto m = vasicek_table(g, 0.01);
  SimOptions o;
  o.dt = 0.05;
  o.n_paths = 8;
  o.maturities = {2.0};
  auto a = simulate(m, ForwardCurve::constant(g, 0.03), o);
  o.threads = 3;
  auto b = simulate(m, ForwardCurve::constant(g, 0.03), o);
  for (int p = 0; p < 8; ++p) {
    EXPECT_EQ(a[p].R, b[p].R);
    EXPECT_EQ(a[p].gop, b[p].gop);
  }
}
