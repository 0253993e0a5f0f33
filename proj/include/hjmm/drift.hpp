#pragma once

// Real-world HJM drift
//   alpha(h, y) = -sum_k sigma^k (Sigma^k - Theta^k(y))
//                 - sum_{uncompensated} gamma^k int x Phi e^{x Gamma^k} F^k(dx)
//                 - sum_{compensated}   gamma^k int x (Phi e^{x Gamma^k} - 1) F^k(dx)
// with Sigma = -int_0 sigma and Gamma = -int_0 gamma.

#include <vector>

#include "hjmm/curve_space.hpp"
#include "hjmm/levy_drivers.hpp"
#include "hjmm/mpr.hpp"
#include "hjmm/quasi_exponential.hpp"

namespace hjmm {

struct ModelSpec {
  GridPtr grid;
  std::vector<QuasiExponentialSpec> sigma;
  std::vector<QuasiExponentialSpec> gamma;
  DriverConfig drivers;
  MprFamily mpr;

  int d() const { return static_cast<int>(sigma.size()); }
  int n() const { return static_cast<int>(gamma.size()); }

  bool state_dependent_vols() const {
    for (const auto& s : sigma)
      if (s.state_scaled) return true;
    for (const auto& g : gamma)
      if (g.state_scaled) return true;
    return false;
  }

  void validate() const {
    if (!grid) throw ConfigError("model without grid");
    if (d() != drivers.d) throw ConfigError("sigma count differs from Wiener count");
    if (n() != drivers.n()) throw ConfigError("gamma count differs from jump component count");
    drivers.validate();
    for (const auto& s : sigma) s.validate();
    for (const auto& g : gamma) g.validate();
    mpr.validate(drivers);
  }
};

// int x Phi(y, x) e^{x g} F(dx), minus int x F(dx) when compensated
inline double jump_drift_integral(const ModelSpec& m, int k, double y, double g) {
  const auto& s = m.drivers.components[k];
  double v;
  if (s.is_table()) {
    v = 0.0;
    for (const auto& a : s.table) v += a.rho * a.x * m.mpr.phi(y, a.x) * std::exp(a.x * g);
  } else {
    double e;
    if (m.mpr.exp_form(y, &e)) {
      v = cumulant_raw(s, e + g, 1);
    } else if (m.mpr.psi_kind == MprFamily::PsiKind::constant_in_x) {
      v = (1.0 + y) * cumulant_raw(s, g, 1);
    } else {
      throw Unsupported("jump drift for this Phi needs a finite jump table");
    }
  }
  return s.compensated ? v - s.mean_jump() : v;
}

// volatilities at h together with their integrals
struct VolState {
  std::vector<ForwardCurve> sigma, Sigma, gamma, Gamma;
};

inline VolState vol_state(const ModelSpec& m, const ForwardCurve& h) {
  VolState v;
  for (const auto& s : m.sigma) {
    v.sigma.push_back(s.eval(h));
    v.Sigma.push_back(integrated_vol(v.sigma.back()));
  }
  for (const auto& g : m.gamma) {
    v.gamma.push_back(g.eval(h));
    v.Gamma.push_back(integrated_vol(v.gamma.back()));
  }
  return v;
}

inline ForwardCurve alpha(const ModelSpec& m, const ForwardCurve& h, double y, const VolState& v) {
  require_same_grid(h, ForwardCurve::zero(m.grid));
  const int n = m.grid->size();
  Vec a = Vec::Zero(n);
  for (int k = 0; k < m.d(); ++k)
    a.array() -= v.sigma[k].values.array() * (v.Sigma[k].values.array() - m.mpr.theta(y, k));
  for (int k = 0; k < m.n(); ++k) {
    const Vec& g = v.gamma[k].values;
    const Vec& G = v.Gamma[k].values;
    for (int i = 0; i < n; ++i)
      if (g[i] != 0.0) a[i] -= g[i] * jump_drift_integral(m, k, y, G[i]);
  }
  return {m.grid, std::move(a)};
}

inline ForwardCurve alpha(const ModelSpec& m, const ForwardCurve& h, double y) {
  return alpha(m, h, y, vol_state(m, h));
}

inline ForwardCurve alpha_risk_neutral(const ModelSpec& m, const ForwardCurve& h) {
  return alpha(m, h, m.mpr.y_star);
}

struct PotentialCheck {
  ForwardCurve lhs;  // int_0^xi alpha(h, y*)
  ForwardCurve rhs;  // sum Sigma^2 / 2 + sum kappa(Gamma)
  double max_residual;
};

// The right-hand side integrates the volatilities with a third-order rule so
// that the two sides share no quadrature.
inline PotentialCheck drift_potential_check(const ModelSpec& m, const ForwardCurve& h) {
  const auto& g = *m.grid;
  ForwardCurve a = alpha_risk_neutral(m, h);
  ForwardCurve lhs{m.grid, cumulative_trapezoid(a.values, g.step())};
  Vec rhs = Vec::Zero(g.size());
  for (const auto& s : m.sigma) {
    Vec S = -cumulative_quadratic(s.eval(h).values, g.step());
    rhs.array() += 0.5 * S.array().square();
  }
  for (int k = 0; k < m.n(); ++k) {
    Vec G = -cumulative_quadratic(m.gamma[k].eval(h).values, g.step());
    const auto& spec = m.drivers.components[k];
    for (int i = 0; i < g.size(); ++i) rhs[i] += cumulant(spec, G[i]);
  }
  double r = (lhs.values - rhs).cwiseAbs().maxCoeff();
  return {std::move(lhs), ForwardCurve{m.grid, std::move(rhs)}, r};
}

}  // namespace hjmm
