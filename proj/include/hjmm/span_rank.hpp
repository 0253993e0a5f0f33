#pragma once

// Numerical dimension of sampled function spans. Every element is stored in
// coordinates whose Euclidean inner product is the ambient one, so the Gram
// matrix is F^T F and ranks come from the SVD of F with unit columns.

#include <Eigen/SVD>

#include <string>
#include <vector>

#include "hjmm/drift.hpp"

namespace hjmm {

inline const char* kRankCaveat =
    "sampled spans understate the span over all curves and states; ranks are numerical evidence at tolerance";

enum class Ambient { curve_space_H, weighted_L2_of_F, L2_F_valued_curves, plain };

inline const char* ambient_name(Ambient a) {
  switch (a) {
    case Ambient::curve_space_H: return "H";
    case Ambient::weighted_L2_of_F: return "L2(F)";
    case Ambient::L2_F_valued_curves: return "L2(F;H)";
    case Ambient::plain: return "l2";
  }
  return "?";
}

struct SpanSampleSet {
  Ambient ambient = Ambient::plain;
  Mat features;  // one column per element
  double tol = 1e-8;

  int count() const { return static_cast<int>(features.cols()); }
  Mat gram() const { return features.transpose() * features; }
  void add(const Vec& f) {
    if (features.cols() == 0) features.resize(f.size(), 0);
    if (f.size() != features.rows()) throw DomainError("span sample of wrong length");
    features.conservativeResize(Eigen::NoChange, features.cols() + 1);
    features.col(features.cols() - 1) = f;
  }
};

struct RankResult {
  int rank = 0;
  Vec singular_values;
  double tol = 1e-8;
};

inline RankResult numerical_rank(const SpanSampleSet& s) {
  RankResult r;
  r.tol = s.tol;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < s.features.cols(); ++j)
    if (s.features.col(j).norm() > 0.0) keep.push_back(j);
  if (keep.empty()) {
    r.singular_values = Vec::Zero(s.features.cols());
    return r;
  }
  Mat A(s.features.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) A.col(j) = s.features.col(keep[j]).normalized();
  // QR first keeps the Jacobi sweeps on a square matrix
  Mat R;
  if (A.rows() > A.cols()) {
    Eigen::HouseholderQR<Mat> qr(A);
    R = qr.matrixQR().topRows(A.cols()).triangularView<Eigen::Upper>();
  } else {
    R = A;
  }
  Eigen::JacobiSVD<Mat> svd(R);
  r.singular_values = svd.singularValues();
  double top = r.singular_values[0];
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i)
    if (r.singular_values[i] >= s.tol * top) ++r.rank;
  return r;
}

// ---- sample builders

// xi -> sum_k int Psi^k(y, x) e^{x Gamma^k(h)(xi)} F^k(dx)
inline ForwardCurve u_psi_gamma_element(const ModelSpec& m, const ForwardCurve& h, double y) {
  const int n = m.grid->size();
  Vec u = Vec::Zero(n);
  for (int k = 0; k < m.n(); ++k) {
    const auto& spec = m.drivers.components[k];
    Vec G = integrated_vol(m.gamma[k].eval(h)).values;
    if (spec.is_table()) {
      for (const auto& a : spec.table) {
        double p = m.mpr.psi(y, a.x);
        if (p == 0.0) continue;
        u.array() += a.rho * p * (a.x * G.array()).exp();
      }
    } else {
      double e;
      if (m.mpr.psi_zero() || m.mpr.at_star(y)) continue;
      if (!m.mpr.exp_form(y, &e)) throw Unsupported("U_{Psi,gamma} with an infinite-activity driver needs an exponential Phi");
      // int (1 - e^{e x}) e^{x G} F(dx) = kappa(G) - kappa(e + G)
      for (int i = 0; i < n; ++i) u[i] += cumulant_raw(spec, G[i], 0) - cumulant_raw(spec, e + G[i], 0);
    }
  }
  return {m.grid, std::move(u)};
}

inline SpanSampleSet sample_U_psi_gamma(const ModelSpec& m, const std::vector<ForwardCurve>& h_samples,
                                        const std::vector<double>& y_samples, double tol = 1e-8) {
  if (h_samples.empty() || y_samples.empty()) throw DomainError("sample_U_psi_gamma: empty samples");
  SpanSampleSet s{Ambient::curve_space_H, {}, tol};
  for (const auto& h : h_samples)
    for (double y : y_samples) s.add(h_features(u_psi_gamma_element(m, h, y)));
  return s;
}

// nodes and weights for int f dF over a bilateral gamma density,
// trapezoid in log|x|
struct LevyQuadrature {
  std::vector<double> x, w;
};

inline LevyQuadrature levy_quadrature(const LevyComponentSpec& s, int per_side = 400) {
  LevyQuadrature q;
  if (s.is_table()) {
    for (const auto& a : s.table) {
      q.x.push_back(a.x);
      q.w.push_back(a.rho);
    }
    return q;
  }
  auto side = [&](double alpha, double lambda, double sign) {
    double lo = std::log(1e-10), hi = std::log(40.0 / lambda);
    double du = (hi - lo) / (per_side - 1);
    for (int i = 0; i < per_side; ++i) {
      double x = std::exp(lo + i * du);
      double wt = (i == 0 || i == per_side - 1) ? 0.5 * du : du;
      // F(dx) = alpha e^{-lambda x} / x dx and dx = x du
      q.x.push_back(sign * x);
      q.w.push_back(wt * alpha * std::exp(-lambda * x));
    }
  };
  side(s.bg.alpha_m, s.bg.lambda_m, -1.0);
  side(s.bg.alpha_p, s.bg.lambda_p, 1.0);
  return q;
}

// x -> Psi^k(y, x) in L2(F^k)
inline SpanSampleSet sample_U_psi(const ModelSpec& m, int k, const std::vector<double>& y_samples, double tol = 1e-8) {
  auto q = levy_quadrature(m.drivers.components.at(k));
  SpanSampleSet s{Ambient::weighted_L2_of_F, {}, tol};
  for (double y : y_samples) {
    Vec f(q.x.size());
    for (size_t j = 0; j < q.x.size(); ++j) f[j] = std::sqrt(q.w[j]) * m.mpr.psi(y, q.x[j]);
    s.add(f);
  }
  return s;
}

inline RankResult rank_U_psi(const ModelSpec& m, int k, const std::vector<double>& y_samples, double tol = 1e-8) {
  return numerical_rank(sample_U_psi(m, k, y_samples, tol));
}

// x -> e^{x Gamma^k(h)} in L2(F^k; H); finite tables only
inline SpanSampleSet sample_U_gamma(const ModelSpec& m, int k, const std::vector<ForwardCurve>& h_samples,
                                    double tol = 1e-8) {
  const auto& spec = m.drivers.components.at(k);
  if (!spec.is_table()) throw Unsupported("x -> e^{x Gamma} is not square integrable under an infinite Levy measure");
  SpanSampleSet s{Ambient::L2_F_valued_curves, {}, tol};
  const int nf = m.grid->size() + 1;
  for (const auto& h : h_samples) {
    Vec G = integrated_vol(m.gamma[k].eval(h)).values;
    Vec f(nf * static_cast<int>(spec.table.size()));
    for (size_t j = 0; j < spec.table.size(); ++j) {
      ForwardCurve e{m.grid, (spec.table[j].x * G.array()).exp().matrix()};
      f.segment(j * nf, nf) = std::sqrt(spec.table[j].rho) * h_features(e);
    }
    s.add(f);
  }
  return s;
}

struct CumulantProfile {
  std::vector<int> full;        // rank of {kappa, ..., kappa^(M)}, M = 0..max
  std::vector<int> derivative;  // rank of {kappa', ..., kappa^(M)}, M = 1..max
  Vec sv_full, sv_derivative;   // spectra at the largest order
  double tol = 1e-8;
};

inline CumulantProfile cumulant_span_rank(const LevyComponentSpec& spec, int max_order, const std::vector<double>& z_grid,
                                          double tol = 1e-8) {
  if (max_order < 0 || max_order > kMaxCumulantOrder) throw DomainError("cumulant order outside [0, 12]");
  for (double z : z_grid) spec.require_admissible(z);
  CumulantProfile p;
  p.tol = tol;
  SpanSampleSet full{Ambient::plain, {}, tol}, der{Ambient::plain, {}, tol};
  for (int m = 0; m <= max_order; ++m) {
    Vec f(z_grid.size());
    for (size_t i = 0; i < z_grid.size(); ++i)
      f[i] = m == 0 ? cumulant(spec, z_grid[i]) : cumulant_deriv(spec, z_grid[i], m);
    full.add(f);
    auto rf = numerical_rank(full);
    p.full.push_back(rf.rank);
    p.sv_full = rf.singular_values;
    if (m >= 1) {
      der.add(f);
      auto rd = numerical_rank(der);
      p.derivative.push_back(rd.rank);
      p.sv_derivative = rd.singular_values;
    }
  }
  return p;
}

}  // namespace hjmm
