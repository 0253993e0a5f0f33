#pragma once

// Candidate affine realizations M_t = psi(t) + V: construction of V from
// quasi-exponential volatilities, the parametrization psi, numerical tangency
// checks, and the induced factor model.

#include <Eigen/SVD>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hjmm/hjmm_sim.hpp"
#include "hjmm/span_rank.hpp"

namespace hjmm {

struct SubspaceV {
  GridPtr grid;
  std::vector<QuasiExponential> generators;  // closed under d/dxi
  Mat basis;     // grid values of an H-orthonormal basis, one column each
  Mat dbasis;    // exact derivatives of the basis columns
  Mat features;  // h_features of the basis; orthonormal columns
  Vec singular_values;
  double tol = 1e-8;

  int dim() const { return static_cast<int>(basis.cols()); }

  Vec coords(const ForwardCurve& h) const { return features.transpose() * h_features(h); }
  ForwardCurve project(const ForwardCurve& h) const { return {grid, basis * coords(h)}; }
  ForwardCurve from_coords(const Vec& z) const { return {grid, basis * z}; }
  // |(I - P_V) h|_H
  double residual_norm(const ForwardCurve& h) const {
    Vec f = h_features(h);
    return (f - features * (features.transpose() * f)).norm();
  }
  // matrix of d/dxi on V: e_j' = sum_i D(i, j) e_i
  Mat derivative_matrix() const {
    Mat D(dim(), dim());
    for (int j = 0; j < dim(); ++j) D.col(j) = coords(ForwardCurve{grid, dbasis.col(j)});
    return D;
  }
};

struct SubspaceOptions {
  double tol = 1e-8;
  // evaluate state-scaled volatilities at this curve
  std::optional<ForwardCurve> freeze_at;
};

inline QuasiExponential effective_shape(const QuasiExponentialSpec& s, const SubspaceOptions& o) {
  if (!s.state_scaled) return s.shape;
  if (!o.freeze_at) throw Unsupported("state-dependent volatility: V needs a freeze curve");
  return s.shape * s.factor(*o.freeze_at);
}

// Generators of V: derivatives of every sigma^k and gamma^k, the products
// sigma^k Sigma^k, and gamma^k x e^{x Gamma^k} for each table atom (these
// also absorb the state-dependent jump drift for every y).
inline std::vector<QuasiExponential> subspace_generators(const ModelSpec& m, const SubspaceOptions& o = {}) {
  std::vector<QuasiExponential> base;
  for (const auto& s : m.sigma) {
    auto q = effective_shape(s, o);
    if (q.is_zero()) continue;
    base.push_back(q);
    base.push_back(q * (-q.integral()));
  }
  for (int k = 0; k < m.n(); ++k) {
    auto q = effective_shape(m.gamma[k], o);
    if (q.is_zero()) continue;
    if (!QuasiExponentialSpec{q}.constant_in_xi())
      throw Unsupported("jump volatility varying in xi makes e^{x Gamma} non quasi-exponential");
    const auto& spec = m.drivers.components[k];
    if (!spec.is_table()) throw Unsupported("infinite-activity jumps do not give a finite generator family");
    double c = q.terms()[0].poly[0];
    base.push_back(q);
    for (const auto& a : spec.table) base.push_back(QuasiExponential::exponential(c * a.x, -c * a.x));
  }
  std::vector<QuasiExponential> all;
  for (const auto& g : base) {
    QuasiExponential d = g;
    for (int i = 0; i < g.closure_bound(); ++i) {
      all.push_back(d);
      d = d.derivative();
      if (d.is_zero()) break;
    }
  }
  return all;
}

inline SubspaceV build_subspace_V(const ModelSpec& m, const SubspaceOptions& o = {}) {
  SubspaceV V;
  V.grid = m.grid;
  V.tol = o.tol;
  V.generators = subspace_generators(m, o);
  const int n = m.grid->size();
  const int p = static_cast<int>(V.generators.size());
  if (p == 0) {
    V.basis.resize(n, 0);
    V.dbasis.resize(n, 0);
    V.features.resize(n + 1, 0);
    return V;
  }
  Mat G(n, p), dG(n, p), F(n + 1, p);
  for (int j = 0; j < p; ++j) {
    G.col(j) = V.generators[j].on(m.grid).values;
    dG.col(j) = V.generators[j].derivative().on(m.grid).values;
    F.col(j) = h_features(ForwardCurve{m.grid, G.col(j)});
    double s = F.col(j).norm();
    if (s == 0.0) continue;
    G.col(j) /= s;
    dG.col(j) /= s;
    F.col(j) /= s;
  }
  Eigen::JacobiSVD<Mat> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
  V.singular_values = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < V.singular_values.size(); ++i)
    if (V.singular_values[i] >= o.tol * V.singular_values[0]) ++r;
  Mat W = svd.matrixV().leftCols(r) * V.singular_values.head(r).cwiseInverse().asDiagonal();
  V.basis = G * W;
  V.dbasis = dG * W;
  V.features = svd.matrixU().leftCols(r);
  return V;
}

struct Foliation {
  SubspaceV V;
  std::vector<ForwardCurve> psi_path;
  double dt = 0.0;

  const ForwardCurve& psi_at(double t) const {
    auto i = static_cast<size_t>(std::lround(t / dt));
    return psi_path.at(std::min(i, psi_path.size() - 1));
  }
};

// psi(0) = h0, psi' = d/dxi psi + (I - P_V) alpha(psi, y*), by splitting
inline Foliation parametrize_foliation(const ModelSpec& m, const SubspaceV& V, const ForwardCurve& h0, double t_max,
                                       double dt) {
  Foliation f{V, {h0}, dt};
  const long n = step_count(t_max, dt);
  ForwardCurve psi = h0;
  for (long i = 0; i < n; ++i) {
    ForwardCurve a = alpha_risk_neutral(m, psi);
    a -= V.project(a);
    Vec v = psi.values + dt * a.values;
    if (!v.allFinite()) throw PathAbort("foliation parametrization blew up at step " + std::to_string(i));
    psi = shift(ForwardCurve{m.grid, std::move(v)}, dt);
    f.psi_path.push_back(psi);
  }
  return f;
}

struct ResidualRow {
  double t;
  int y_index;
  double drift;
  std::vector<double> vol, jump;
};

struct InvarianceReport {
  std::vector<ResidualRow> rows;
  double max_drift = 0.0, max_vol = 0.0, max_jump = 0.0;
  int dim = 0;
  double max() const { return std::max({max_drift, max_vol, max_jump}); }
};

// Test points v in V given analytically, so they are the same functions on
// every grid and their derivatives are exact.
inline std::vector<QuasiExponential> v_samples(const SubspaceV& V, int count, double amplitude, std::uint64_t seed = 7) {
  std::vector<QuasiExponential> out;
  if (V.generators.empty()) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  out.emplace_back();  // v = 0
  for (int s = 1; s < count; ++s) {
    QuasiExponential v;
    for (const auto& g : V.generators) {
      double nrm = h_norm(g.on(V.grid));
      if (nrm > 0.0) v = v + g * (u(rng) / nrm);
    }
    double nrm = h_norm(v.on(V.grid));
    out.push_back(nrm > 0.0 ? v * (amplitude / nrm) : v);
  }
  return out;
}

// For h = psi(t) + v: residual_drift = |(I-P)(d/dxi h + alpha(h, y) - psi'(t))|
// with psi'(t) = d/dxi psi + (I-P) alpha(psi, y*), so the transport of psi
// cancels and only v' + alpha(h, y) - alpha(psi, y*) is projected.
inline InvarianceReport check_invariance(const ModelSpec& m, const Foliation& f, const std::vector<double>& t_samples,
                                         const std::vector<QuasiExponential>& vs) {
  InvarianceReport rep;
  rep.dim = f.V.dim();
  const auto& ys = m.mpr.y_samples;
  for (double t : t_samples) {
    const ForwardCurve& psi = f.psi_at(t);
    ForwardCurve a_star = alpha_risk_neutral(m, psi);
    std::vector<ResidualRow> rows;
    for (size_t yi = 0; yi < ys.size(); ++yi)
      rows.push_back({t, static_cast<int>(yi), 0.0, std::vector<double>(m.d(), 0.0), std::vector<double>(m.n(), 0.0)});
    for (const auto& v : vs) {
      ForwardCurve h = psi + v.on(m.grid);
      ForwardCurve dv = v.derivative().on(m.grid);
      VolState vol = vol_state(m, h);
      std::vector<double> rv(m.d()), rj(m.n());
      for (int k = 0; k < m.d(); ++k) rv[k] = f.V.residual_norm(vol.sigma[k]);
      for (int k = 0; k < m.n(); ++k) rj[k] = f.V.residual_norm(vol.gamma[k]);
      for (size_t yi = 0; yi < ys.size(); ++yi) {
        ForwardCurve g = dv + alpha(m, h, ys[yi], vol) - a_star;
        auto& row = rows[yi];
        row.drift = std::max(row.drift, f.V.residual_norm(g));
        for (int k = 0; k < m.d(); ++k) row.vol[k] = std::max(row.vol[k], rv[k]);
        for (int k = 0; k < m.n(); ++k) row.jump[k] = std::max(row.jump[k], rj[k]);
      }
    }
    for (auto& r : rows) {
      rep.max_drift = std::max(rep.max_drift, r.drift);
      for (double x : r.vol) rep.max_vol = std::max(rep.max_vol, x);
      for (double x : r.jump) rep.max_jump = std::max(rep.max_jump, x);
      rep.rows.push_back(std::move(r));
    }
  }
  return rep;
}

enum class CertVerdict { certified, refuted, inconclusive };

inline const char* cert_name(CertVerdict v) {
  switch (v) {
    case CertVerdict::certified: return "certified";
    case CertVerdict::refuted: return "refuted";
    case CertVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct CertifyOptions {
  double t_max = 1.0;
  double dt = 0.01;
  std::vector<double> t_samples{0.0, 0.5, 1.0};
  int v_count = 4;
  double v_amplitude = 0.01;
  double tol_certified = 1e-6;
  double tol_refuted = 1e-3;
  double retained = 0.9;  // refined / base residual above this is structural
  double rank_tol = 1e-8;
};

struct Certification {
  CertVerdict verdict = CertVerdict::inconclusive;
  InvarianceReport base, refined;
  double ratio = 0.0;  // refined max / base max
  SubspaceV V;
};

inline ModelSpec with_grid(ModelSpec m, GridPtr g) {
  m.grid = std::move(g);
  return m;
}

// Runs the tangency checks on the model grid and on its refinement.
inline Certification certify(const ModelSpec& m, const ForwardCurve& h0, const CertifyOptions& o = {}) {
  m.validate();
  Certification c;
  auto run = [&](const ModelSpec& mm, const ForwardCurve& h, const std::vector<QuasiExponential>* vs_in,
                 std::vector<QuasiExponential>* vs_out) {
    SubspaceOptions so{o.rank_tol, h};
    SubspaceV V = build_subspace_V(mm, so);
    Foliation f = parametrize_foliation(mm, V, h, o.t_max, o.dt);
    std::vector<QuasiExponential> vs = vs_in ? *vs_in : v_samples(V, o.v_count, o.v_amplitude);
    if (vs_out) *vs_out = vs;
    return std::make_pair(check_invariance(mm, f, o.t_samples, vs), V);
  };
  std::vector<QuasiExponential> vs;
  auto [base, V] = run(m, h0, nullptr, &vs);
  c.base = std::move(base);
  c.V = std::move(V);
  auto fine = std::make_shared<const CurveGrid>(m.grid->refined());
  ModelSpec mf = with_grid(m, fine);
  c.refined = run(mf, resample(h0, fine), &vs, nullptr).first;
  double b = c.base.max();
  c.ratio = b > 0.0 ? c.refined.max() / b : 0.0;
  if (b <= o.tol_certified)
    c.verdict = CertVerdict::certified;
  else if (b > o.tol_refuted && c.ratio > o.retained)
    c.verdict = CertVerdict::refuted;
  else
    c.verdict = CertVerdict::inconclusive;
  return c;
}

// z_{n+1} = z + (D z + a) dt + b dW + c dX on coordinates of V,
// r = psi(t) + sum z_i e_i, a = coordinates of alpha(r, y).
struct FactorModel {
  SubspaceV V;
  Mat D;
  Mat b;  // dim x d
  Mat c;  // dim x n
};

inline FactorModel finite_dim_realization(const ModelSpec& m, const Certification& cert) {
  if (cert.verdict != CertVerdict::certified) throw NotCertified("factor model requested for an uncertified scenario");
  if (m.state_dependent_vols()) throw NotCertified("factor model needs state-independent volatilities");
  FactorModel f{cert.V, cert.V.derivative_matrix(), Mat(cert.V.dim(), m.d()), Mat(cert.V.dim(), m.n())};
  ForwardCurve zero = ForwardCurve::zero(m.grid);
  for (int k = 0; k < m.d(); ++k) f.b.col(k) = cert.V.coords(m.sigma[k].eval(zero));
  for (int k = 0; k < m.n(); ++k) f.c.col(k) = cert.V.coords(m.gamma[k].eval(zero));
  return f;
}

// H norm restricted to [0, xi_end]
inline double h_norm_upto(const ForwardCurve& h, double xi_end) {
  const auto& g = *h.grid;
  Vec d = fd_derivative(h.values, g.step());
  long iend = std::min<long>(g.size() - 1, std::lround(std::floor(xi_end / g.step() + 1e-9)));
  double s = h.values[0] * h.values[0];
  for (long i = 0; i <= iend; ++i) {
    double q = (i == 0 || i == iend) ? 0.5 * g.step() : g.step();
    s += q * g.weight()[i] * d[i] * d[i];
  }
  return std::sqrt(s);
}

struct FactorComparison {
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
  int paths = 0;
};

// Full SPDE and factor model driven by the same increments, frozen state y.
// Errors are measured on [0, xi_max - t_max], the part of the curve that the
// constant extension past xi_max has not reached.
inline FactorComparison compare_factor_vs_full(const ModelSpec& m, const FactorModel& fm, const ForwardCurve& h0,
                                               double y, double t_max, double dt, int n_paths, std::uint64_t seed,
                                               int threads = 1) {
  Foliation fol = parametrize_foliation(m, fm.V, h0, t_max, dt);
  const long n = step_count(t_max, dt);
  const double xi_end = m.grid->xi_max() - t_max;
  DriftCache cache_proto(m, h0);
  // volatilities do not depend on the curve, so neither does alpha
  const Vec a = fm.V.coords(cache_proto(y));
  std::vector<double> rel(n_paths);
  parallel_for(n_paths, threads, [&](int p) {
    DriftCache cache = cache_proto;
    DriverSampler s(m.drivers, dt, path_seed(seed, static_cast<std::uint64_t>(p)));
    StepIncrement inc;
    ForwardCurve r = h0;
    Vec z = Vec::Zero(fm.V.dim());
    for (long i = 0; i < n; ++i) {
      s.next(inc);
      Vec dz = (fm.D * z + a) * dt;
      for (int k = 0; k < m.d(); ++k) dz += fm.b.col(k) * inc.dW[k];
      for (int k = 0; k < m.n(); ++k) dz += fm.c.col(k) * inc.dX[k];
      z += dz;
      r = step_with(r, cache(y), cache.vols(), dt, inc);
    }
    ForwardCurve fac = fol.psi_path[n] + fm.V.from_coords(z);
    rel[p] = h_norm_upto(r - fac, xi_end) / h_norm_upto(r, xi_end);
  });
  FactorComparison c;
  c.paths = n_paths;
  for (double e : rel) {
    c.mean_rel_error += e / n_paths;
    c.max_rel_error = std::max(c.max_rel_error, e);
  }
  return c;
}

}  // namespace hjmm
