#include <gtest/gtest.h>

#include <cmath>

#include "hjmm/curve_space.hpp"

using namespace hjmm;

namespace {

// independent quadrature: composite Simpson with the exact derivative
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(CurveSpace, ConstantCurveNormIsAbsoluteValue) {
  auto g = make_grid();
  EXPECT_DOUBLE_EQ(h_norm(ForwardCurve::constant(g, -0.7)), 0.7);
  EXPECT_DOUBLE_EQ(h_norm(ForwardCurve::zero(g)), 0.0);
}

TEST(CurveSpace, ExponentialNormMatchesClosedForm) {
  auto g = make_grid(30.0, 30001, 0.5);
  auto h = ForwardCurve::from(g, [](double x) { return std::exp(-x); });
  EXPECT_NEAR(h_norm(h), std::sqrt(5.0 / 3.0), 1e-6);
  EXPECT_NEAR(std::sqrt(5.0 / 3.0), 1.290994, 5e-7);
}

TEST(CurveSpace, InnerProductMatchesIndependentQuadrature) {
  auto g = make_grid(30.0, 30001, 0.5);
  auto a = ForwardCurve::from(g, [](double x) { return std::exp(-x); });
  auto b = ForwardCurve::from(g, [](double x) { return std::exp(-2 * x); });
  double ref = 1.0 + simpson([](double x) { return 2.0 * std::exp(-3 * x) * std::exp(0.5 * x); }, 0.0, 30.0, 200000);
  EXPECT_NEAR(ref, 1.8, 1e-12);
  EXPECT_NEAR(inner_product(a, b) / ref, 1.0, 1e-6);
  EXPECT_NEAR(inner_product(a, a), h_norm(a) * h_norm(a), 1e-14);
  EXPECT_DOUBLE_EQ(inner_product(a, ForwardCurve::zero(g)), 0.0);
}

TEST(CurveSpace, FeaturesReproduceInnerProduct) {
  auto g = make_grid(10.0, 101, 0.2);
  auto a = ForwardCurve::from(g, [](double x) { return std::sin(x); });
  auto b = ForwardCurve::from(g, [](double x) { return 1.0 + 0.1 * x; });
  EXPECT_NEAR(h_features(a).dot(h_features(b)), inner_product(a, b), 1e-13);
}

TEST(CurveSpace, RejectsMismatchedGridsAndBadCurves) {
  auto g1 = make_grid(30.0, 601), g2 = make_grid(30.0, 301);
  EXPECT_THROW(inner_product(ForwardCurve::zero(g1), ForwardCurve::zero(g2)), GridMismatch);
  auto bad = ForwardCurve::constant(g1, 1.0);
  bad.values[3] = std::nan("");
  EXPECT_THROW(h_norm(bad), InvalidCurve);
  EXPECT_THROW(ForwardCurve(g1, Vec::Zero(5)), InvalidCurve);
  EXPECT_THROW(CurveGrid(30.0, 4), DomainError);
}

TEST(CurveSpace, ShiftIdentityClosedFormAndSemigroup) {
  auto g = make_grid(30.0, 601);
  auto h = ForwardCurve::from(g, [](double x) { return std::exp(-x); });
  EXPECT_EQ(shift(h, 0.0).values, h.values);

  auto s = shift(h, 0.5);  // on grid
  for (int i = 0; i < g->size() - 10; ++i) EXPECT_NEAR(s.values[i], std::exp(-(g->node(i) + 0.5)), 1e-15);
  auto s2 = shift(h, 0.37);  // interpolated
  for (int i = 0; i < g->size() - 10; ++i) EXPECT_NEAR(s2.values[i], std::exp(-(g->node(i) + 0.37)), 2e-6);

  auto a = shift(shift(h, 0.2), 0.3), b = shift(h, 0.5);
  EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-14);
  auto c = shift(shift(h, 0.13), 0.21), d = shift(h, 0.34);
  EXPECT_LT((c.values - d.values).cwiseAbs().maxCoeff(), 2e-6);
  EXPECT_THROW(shift(h, -0.1), DomainError);
}

TEST(CurveSpace, IntegratedVolatility) {
  auto g = make_grid(30.0, 601);
  auto sig = integrated_vol(ForwardCurve::constant(g, 0.02));
  for (int i = 0; i < g->size(); ++i) EXPECT_NEAR(sig.values[i], -0.02 * g->node(i), 1e-15);
  EXPECT_EQ(integrated_vol(ForwardCurve::zero(g)).values, Vec::Zero(g->size()));

  auto fine = make_grid(30.0, 30001);
  auto v = integrated_vol(ForwardCurve::from(fine, [](double x) { return 0.02 * std::exp(-0.1 * x); }));
  double at1 = v.values[1000];
  EXPECT_NEAR(fine->node(1000), 1.0, 1e-15);
  EXPECT_NEAR(at1, -0.0190326, 1e-7);
  EXPECT_NEAR(at1, -0.2 * (1.0 - std::exp(-0.1)), 1e-10);
}

TEST(CurveSpace, DerivativeIsSecondOrder) {
  auto g = make_grid(30.0, 601);
  EXPECT_LT(derivative(ForwardCurve::constant(g, 3.0)).values.cwiseAbs().maxCoeff(), 1e-13);
  auto lin = derivative(ForwardCurve::from(g, [](double x) { return 1.0 + 0.25 * x; }));
  EXPECT_LT((lin.values.array() - 0.25).abs().maxCoeff(), 1e-12);

  auto err = [](int n) {
    auto gg = make_grid(10.0, n);
    auto d = derivative(ForwardCurve::from(gg, [](double x) { return std::exp(-x); }));
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(d.values[i] + std::exp(-gg->node(i))));
    return e;
  };
  double e1 = err(201), e2 = err(401), e3 = err(801);
  EXPECT_GT(std::log2(e1 / e2), 1.9);
  EXPECT_GT(std::log2(e2 / e3), 1.9);
}

TEST(CurveSpace, CumulativeQuadraticIsThirdOrder) {
  auto err = [](int n) {
    auto gg = make_grid(5.0, n);
    Vec f(n);
    for (int i = 0; i < n; ++i) f[i] = std::cos(gg->node(i));
    Vec c = cumulative_quadratic(f, gg->step());
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(c[i] - std::sin(gg->node(i))));
    return e;
  };
  EXPECT_GT(std::log2(err(101) / err(201)), 2.8);
}

TEST(CurveSpace, ResampleIsExactOnNestedGrids) {
  auto g = make_grid(10.0, 101);
  auto h = ForwardCurve::from(g, [](double x) { return std::exp(-0.3 * x); });
  auto fine = std::make_shared<const CurveGrid>(g->refined());
  auto r = resample(h, fine);
  for (int i = 0; i < g->size(); ++i) EXPECT_DOUBLE_EQ(r.values[2 * i], h.values[i]);
}
