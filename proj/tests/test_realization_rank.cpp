#include <gtest/gtest.h>

#include <cmath>

#include "hjmm/analysis_oracles.hpp"
#include "hjmm/realization.hpp"

using namespace hjmm;

namespace {

const std::vector<JumpAtom> kTable = {{-1.0, 0.5}, {0.5, 1.0}, {2.0, 0.25}};

ModelSpec base(const GridPtr& g) {
  ModelSpec m;
  m.grid = g;
  m.drivers = {0, {}};
  return m;
}

}  // namespace

TEST(SubspaceV, DimensionsOfClassicalModels) {
  auto g = make_grid();
  auto m = base(g);
  m.sigma = {QuasiExponentialSpec::constant(0.02)};
  m.drivers.d = 1;
  EXPECT_EQ(build_subspace_V(m).dim(), 2);  // {1, xi}
  m.sigma = {QuasiExponentialSpec::vasicek(0.02, 0.1)};
  auto V = build_subspace_V(m);
  EXPECT_EQ(V.dim(), 2);  // {e^{-l xi}, e^{-2 l xi}}

  // the basis is H-orthonormal and the rank oracle agrees with the dimension
  SpanSampleSet s{Ambient::curve_space_H, {}, 1e-8};
  for (const auto& q : V.generators) s.add(h_features(q.on(g)) / h_features(q.on(g)).norm());
  EXPECT_EQ(numerical_rank(s).rank, V.dim());
  Mat gram = V.features.transpose() * V.features;
  EXPECT_LT((gram - Mat::Identity(2, 2)).norm(), 1e-12);

  m.gamma = {QuasiExponentialSpec::constant(0.05)};
  m.drivers.components = {LevyComponentSpec::jump_table(kTable)};
  EXPECT_LE(build_subspace_V(m).dim(), 2 + 3 + 1);
}

TEST(SubspaceV, StateScaledVolatilityNeedsFreezeCurve) {
  auto m = base(make_grid());
  m.gamma = {QuasiExponentialSpec::short_rate_scaled(5.0)};
  m.drivers.components = {LevyComponentSpec::jump_table(kTable)};
  EXPECT_THROW(build_subspace_V(m), Unsupported);
}

TEST(Foliation, ZeroVolatilityIsPureShift) {
  auto g = make_grid(10.0, 201);
  auto m = base(g);
  m.sigma = {QuasiExponentialSpec::constant(0.0)};
  m.drivers.d = 1;
  auto h0 = ForwardCurve::from(g, [](double x) { return 0.03 + 0.002 * x; });
  auto f = parametrize_foliation(m, build_subspace_V(m), h0, 1.0, 0.05);
  EXPECT_EQ(f.psi_at(1.0).values, shift(h0, 1.0).values);
}

TEST(Invariance, WienerOnlyVasicekIsCertified) {
  auto g = make_grid();
  auto m = base(g);
  m.sigma = {QuasiExponentialSpec::vasicek(0.02, 0.1)};
  m.drivers.d = 1;
  m.mpr.theta_kind = MprFamily::ThetaKind::constant_vector;
  m.mpr.theta_const = {0.3};
  m.mpr.y_samples = {0.0, 0.5};
  auto c = certify(m, ForwardCurve::constant(g, 0.03));
  EXPECT_EQ(c.verdict, CertVerdict::certified);
  EXPECT_LE(c.base.max(), 1e-6);
}

TEST(Invariance, OnlyStarSampleReducesToRiskNeutralCheck) {
  auto g = make_grid();
  auto m = base(g);
  m.sigma = {QuasiExponentialSpec::vasicek(0.02, 0.1)};
  m.drivers.d = 1;
  m.mpr.theta_kind = MprFamily::ThetaKind::constant_vector;
  m.mpr.theta_const = {0.3};
  m.mpr.y_samples = {0.0};
  auto V = build_subspace_V(m);
  auto f = parametrize_foliation(m, V, ForwardCurve::constant(g, 0.03), 1.0, 0.01);
  auto vs = v_samples(V, 3, 0.01);
  auto rep = check_invariance(m, f, {0.0, 1.0}, vs);
  for (const auto& row : rep.rows) EXPECT_EQ(row.y_index, 0);
  m.mpr.theta_kind = MprFamily::ThetaKind::zero;
  auto rn = check_invariance(m, f, {0.0, 1.0}, vs);
  EXPECT_EQ(rep.max_drift, rn.max_drift);
}

TEST(Invariance, ShortRateScaledJumpsAreRefuted) {
  auto g = make_grid();
  auto m = base(g);
  m.sigma = {QuasiExponentialSpec::vasicek(0.02, 0.1)};
  m.drivers.d = 1;
  m.gamma = {QuasiExponentialSpec::short_rate_scaled(5.0)};
  m.drivers.components = {LevyComponentSpec::jump_table(kTable)};
  m.mpr.psi_kind = MprFamily::PsiKind::constant_in_x;
  m.mpr.y_samples = {0.0, 0.3};
  auto c = certify(m, ForwardCurve::constant(g, 0.03));
  EXPECT_EQ(c.verdict, CertVerdict::refuted);
  EXPECT_GT(c.base.max_drift, 1e-3);
  EXPECT_GT(c.ratio, 0.9);
  EXPECT_THROW(finite_dim_realization(m, c), NotCertified);
}

TEST(FactorModel, ZeroNoiseStaysOnFoliation) {
  auto g = make_grid(10.0, 201);
  auto m = base(g);
  m.sigma = {QuasiExponentialSpec::constant(0.0)};
  m.drivers.d = 1;
  auto h0 = ForwardCurve::constant(g, 0.03);
  auto c = certify(m, h0, CertifyOptions{1.0, 0.05, {0.0, 1.0}});
  ASSERT_EQ(c.verdict, CertVerdict::certified);
  auto fm = finite_dim_realization(m, c);
  EXPECT_EQ(fm.V.dim(), 0);
  auto cmp = compare_factor_vs_full(m, fm, h0, 0.0, 1.0, 0.05, 4, 1);
  EXPECT_EQ(cmp.max_rel_error, 0.0);
}

TEST(Rank, BasicFamilies) {
  SpanSampleSet s{Ambient::plain, {}, 1e-8};
  Vec v = Vec::LinSpaced(20, 0.0, 1.0);
  s.add(v);
  s.add(v);
  EXPECT_EQ(numerical_rank(s).rank, 1);
  SpanSampleSet z{Ambient::plain, {}, 1e-8};
  z.add(Vec::Zero(20));
  EXPECT_EQ(numerical_rank(z).rank, 0);

  auto g = make_grid();
  SpanSampleSet e{Ambient::curve_space_H, {}, 1e-8};
  for (int k = 1; k <= 3; ++k) e.add(h_features(ForwardCurve::from(g, [k](double x) { return std::exp(-k * x); })));
  EXPECT_EQ(numerical_rank(e).rank, 3);
  // Gram determinant of the three exponentials at 50 digits
  std::vector<std::vector<HP>> gram(3, std::vector<HP>(3));
  Mat G = e.gram();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gram[i][j] = G(i, j);
  EXPECT_GT(static_cast<double>(detail::hp_determinant(gram)), 1e-6);
}

TEST(Rank, UPsiFamilies) {
  auto m = base(make_grid());
  m.gamma = {QuasiExponentialSpec::constant(0.1)};
  m.drivers.components = {LevyComponentSpec::jump_table(kTable)};
  m.mpr.psi_kind = MprFamily::PsiKind::constant_in_x;
  EXPECT_EQ(rank_U_psi(m, 0, {0.0, 0.1, 0.2, 0.5}).rank, 1);
  EXPECT_EQ(rank_U_psi(m, 0, {0.0}).rank, 0);

  m.drivers.components = {LevyComponentSpec::jump_table({{-2, 1}, {-1.5, 1}, {-1, 1}, {1, 1}, {1.5, 1}, {2, 1}})};
  m.mpr.psi_kind = MprFamily::PsiKind::product_form;
  m.mpr.vartheta = {VarthetaSpec::Kind::linear, 1.0};
  m.mpr.xi_map = {XiMapSpec::Kind::cube, 1.0};
  EXPECT_EQ(rank_U_psi(m, 0, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}).rank, 6);
}

TEST(Rank, UPsiGammaFamilies) {
  auto g = make_grid();
  auto m = base(g);
  m.gamma = {QuasiExponentialSpec::constant(0.1)};
  m.drivers.components = {LevyComponentSpec::jump_table(kTable)};
  std::vector<ForwardCurve> hs = {ForwardCurve::constant(g, 0.01), ForwardCurve::constant(g, 0.05)};
  EXPECT_EQ(numerical_rank(sample_U_psi_gamma(m, hs, {0.0, 0.3})).rank, 0);  // Psi = 0
  m.mpr.psi_kind = MprFamily::PsiKind::constant_in_x;
  EXPECT_EQ(numerical_rank(sample_U_psi_gamma(m, hs, {0.0, 0.1, 0.3})).rank, 1);

  m.gamma = {QuasiExponentialSpec::short_rate_scaled(5.0)};
  std::vector<ForwardCurve> seg;
  for (int i = 1; i <= 5; ++i) seg.push_back(ForwardCurve::constant(g, 0.03 * i / 5.0));
  EXPECT_GE(numerical_rank(sample_U_psi_gamma(m, seg, {0.0, 0.3})).rank, 5);
}

TEST(Rank, CumulantProfiles) {
  auto table = LevyComponentSpec::jump_table(kTable);
  std::vector<double> z;
  for (int i = 0; i < 201; ++i) z.push_back(-3.0 + 6.0 * i / 200);
  auto p = cumulant_span_rank(table, 8, z);
  EXPECT_LE(p.full[0], 1);
  EXPECT_EQ(p.derivative.back(), 3);
  EXPECT_EQ(p.full.back(), 4);  // kappa carries the constant -sum rho

  auto bg = LevyComponentSpec::bilateral_gamma({1, 5, 1, 5});
  std::vector<double> zb;
  for (int i = 0; i < 201; ++i) zb.push_back(-4.5 + 9.0 * i / 200);
  auto q = cumulant_span_rank(bg, 8, zb);
  EXPECT_EQ(q.full.back(), 9);
  for (size_t i = 1; i < q.full.size(); ++i) EXPECT_GT(q.full[i], q.full[i - 1]);
}

TEST(Oracles, VandermondeCertificate) {
  EXPECT_TRUE(vandermonde_certificate({0.7}, {2.0}).independent);
  auto c = vandermonde_certificate({0.1, 0.2, 0.3}, {1.0, 2.0, 3.0});
  EXPECT_TRUE(c.independent);
  EXPECT_NE(c.determinant, 0.0);
  EXPECT_EQ(vandermonde_certificate({0.1, 0.2, 0.3}, {1.0, 2.0, 2.0}).determinant, 0.0);
  EXPECT_THROW(vandermonde_certificate({0.1, 0.1}, {1.0, 2.0}), DomainError);
  EXPECT_TRUE(vandermonde_certificate({}, {1.0, 2.0, 3.0}, true).independent);
}

TEST(Oracles, EvaluationPointSelection) {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.01 * i);
  auto poly = select_eval_points({[](double) { return 1.0; }, [](double x) { return x; }, [](double x) { return x * x; }},
                                 grid);
  EXPECT_TRUE(poly.success);
  EXPECT_EQ(poly.points.size(), 3u);
  EXPECT_NE(poly.determinant, 0.0);
  EXPECT_FALSE(select_eval_points({[](double x) { return std::exp(-x); }, [](double x) { return 2 * std::exp(-x); }},
                                  grid)
                   .success);
  EXPECT_TRUE(select_eval_points({[](double x) { return std::exp(-x); }, [](double x) { return std::exp(-2 * x); }},
                                 grid)
                  .success);
}

TEST(Oracles, LaplaceTransforms) {
  DiscreteMeasure unit{{{0.0, 1.0}}};
  for (double l : {0.0, 0.5, 3.0}) EXPECT_EQ(laplace(unit, l), 1.0);
  EXPECT_NEAR(laplace(DiscreteMeasure{{{1.0, 2.0}}}, 0.5), 1.213061, 1e-6);
  EXPECT_EQ(laplace(DiscreteMeasure{}, 0.5), 0.0);
  DiscreteMeasure neg{{{-1.0, 1.0}}};
  EXPECT_THROW(laplace(neg, 2.0, {0.0, 1.0}), DomainError);
}

TEST(Oracles, LaplaceHarness) {
  std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
  DiscreteMeasure a{{{1.0, 1.0}}}, b{{{2.0, 1.0}}};
  auto r = laplace_uniqueness_harness(a, b, grid);
  EXPECT_EQ(r.verdict, Verdict::distinct);
  EXPECT_NEAR(std::exp(-1.0) - std::exp(-2.0), 0.232544, 1e-6);
  EXPECT_EQ(laplace_uniqueness_harness(a, a, grid).verdict, Verdict::equal);

  // equal mass, different atoms: a grid hugging lambda = 0 cannot tell them
  // apart and must not call them equal; a refined grid separates them
  std::vector<double> coarse{0.0, 1e-14};
  EXPECT_EQ(laplace_uniqueness_harness(a, b, coarse).verdict, Verdict::inconclusive);
  EXPECT_EQ(laplace_uniqueness_harness(a, b, grid).verdict, Verdict::distinct);
  EXPECT_THROW(laplace_uniqueness_harness(a, b, {0.0}), DomainError);
}

TEST(Oracles, RandomizedSuite) {
  auto s = run_oracle_suite(1234, 100);
  EXPECT_EQ(s.family_disagreements, 0);
  EXPECT_EQ(s.distinct_detected, s.distinct_pairs);
  EXPECT_EQ(s.false_separations, 0);
  EXPECT_LE(s.max_residual, 1e-8);
}
