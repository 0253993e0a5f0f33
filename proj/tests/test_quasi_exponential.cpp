#include <gtest/gtest.h>

#include <cmath>

#include "hjmm/quasi_exponential.hpp"

using namespace hjmm;

TEST(QuasiExponential, EvaluationAndCalculus) {
  auto q = QuasiExponential::exponential(0.02, -0.1) + QuasiExponential::monomial(1, -0.5, 3.0);
  for (double x : {0.0, 0.7, 4.0}) {
    EXPECT_NEAR(q(x), 0.02 * std::exp(-0.1 * x) + 3.0 * x * std::exp(-0.5 * x), 1e-15);
    EXPECT_NEAR(q.derivative()(x),
                -0.002 * std::exp(-0.1 * x) + 3.0 * std::exp(-0.5 * x) - 1.5 * x * std::exp(-0.5 * x), 1e-15);
  }
  auto I = q.integral();
  EXPECT_NEAR(I(0.0), 0.0, 1e-15);
  // d/dx of the integral gives back q
  for (double x : {0.3, 2.0, 9.0}) EXPECT_NEAR(I.derivative()(x), q(x), 1e-13);
}

TEST(QuasiExponential, ProductMergesRates) {
  auto a = QuasiExponential::exponential(2.0, -0.1);
  auto p = a * a;
  EXPECT_NEAR(p(1.5), 4.0 * std::exp(-0.3), 1e-14);
  EXPECT_EQ(p.terms().size(), 1u);
  auto s = a + a;
  EXPECT_EQ(s.terms().size(), 1u);
  EXPECT_NEAR(s(2.0), 4.0 * std::exp(-0.2), 1e-14);
}

TEST(QuasiExponential, ClosureBoundCountsDerivativeSpan) {
  EXPECT_EQ(QuasiExponential::exponential(1.0, -0.2).closure_bound(), 1);
  EXPECT_EQ(QuasiExponential::monomial(2, -0.2).closure_bound(), 3);
  auto q = QuasiExponential::exponential(1.0, -0.2) + QuasiExponential::monomial(1, 0.0);
  EXPECT_EQ(q.closure_bound(), 3);
}

TEST(QuasiExponentialSpec, ValidationAndScaling) {
  EXPECT_THROW(QuasiExponentialSpec::vasicek(0.02, -0.1), DomainError);
  QuasiExponentialSpec grow{QuasiExponential::exponential(1.0, 0.1)};
  EXPECT_THROW(grow.validate(), DomainError);
  EXPECT_TRUE(QuasiExponentialSpec::constant(0.3).constant_in_xi());
  EXPECT_FALSE(QuasiExponentialSpec::vasicek(0.02, 0.1).constant_in_xi());

  auto g = make_grid(10.0, 101);
  auto s = QuasiExponentialSpec::short_rate_scaled(5.0);
  auto v = s.eval(ForwardCurve::constant(g, 0.03));
  EXPECT_NEAR(v.values.minCoeff(), 0.15, 1e-15);
  EXPECT_NEAR(v.values.maxCoeff(), 0.15, 1e-15);
}
