#pragma once

// Real-world simulation of the HJMM equation by splitting: an Euler step for
// drift and noise followed by an exact shift by dt.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "hjmm/drift.hpp"
#include "hjmm/parallel.hpp"

namespace hjmm {

// exp(-int_0^tau h). Trapezoid on whole cells with the endpoint slope
// correction, plus the exact integral of the cubic Hermite cell for the
// fractional remainder.
inline double bond_price(const ForwardCurve& h, double tau) {
  const auto& g = *h.grid;
  const double dx = g.step();
  if (tau < 0.0 && tau > -1e-12) tau = 0.0;
  if (!(tau >= 0.0) || tau > g.xi_max() * (1.0 + 1e-12)) throw DomainError("bond_price: tau outside [0, xi_max]");
  if (tau == 0.0) return 1.0;
  const Vec& f = h.values;
  const int n = g.size();
  double u = tau / dx;
  long m = std::lround(u);
  double s;
  if (std::abs(u - m) <= 1e-9 * std::max(1.0, u)) {
    s = 0.0;
  } else {
    m = static_cast<long>(std::floor(u));
    s = u - m;
  }
  m = std::min<long>(m, n - 1);
  // fourth-order slopes, one-sided near the ends
  auto slope = [&](long i) {
    if (i < 2) return (-25 * f[i] + 48 * f[i + 1] - 36 * f[i + 2] + 16 * f[i + 3] - 3 * f[i + 4]) / (12 * dx);
    if (i > n - 3) return (25 * f[i] - 48 * f[i - 1] + 36 * f[i - 2] - 16 * f[i - 3] + 3 * f[i - 4]) / (12 * dx);
    return (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * dx);
  };
  double I = 0.0;
  if (m > 0) {
    I = dx * (f.head(m + 1).sum() - 0.5 * (f[0] + f[m]));
    I -= dx * dx / 12.0 * (slope(m) - slope(0));
  }
  if (s > 0.0 && m < n - 1) I += hermite_cell_integral(f[m], f[m + 1], slope(m), slope(m + 1), dx, s);
  return std::exp(-I);
}

// Drift evaluator for fixed volatility curves. Reuses alpha(., y*) and the
// exponentials e^{x Gamma(xi)} so that a change of state costs O(n q).
class DriftCache {
 public:
  DriftCache(const ModelSpec& m, const ForwardCurve& h) : m_(&m), vs_(vol_state(m, h)), h_(h) {
    alpha0_ = alpha(m, h, m.mpr.y_star, vs_);
    all_tables_ = true;
    for (const auto& c : m.drivers.components) all_tables_ = all_tables_ && c.is_table();
    if (all_tables_ && !m.mpr.psi_zero()) {
      for (int k = 0; k < m.n(); ++k) {
        const auto& t = m.drivers.components[k].table;
        Mat E(m.grid->size(), t.size());
        for (int i = 0; i < m.grid->size(); ++i)
          for (size_t j = 0; j < t.size(); ++j) E(i, j) = std::exp(t[j].x * vs_.Gamma[k].values[i]);
        expo_.push_back(std::move(E));
      }
    }
  }

  const VolState& vols() const { return vs_; }

  const ForwardCurve& operator()(double y) {
    if (have_last_ && y == last_y_) return last_;
    const auto& m = *m_;
    if (m.mpr.at_star(y)) {
      last_ = alpha0_;
    } else if (m.mpr.psi_zero() || all_tables_) {
      last_ = alpha0_;
      for (int k = 0; k < m.d(); ++k) last_.values += m.mpr.theta(y, k) * vs_.sigma[k].values;
      if (!m.mpr.psi_zero()) {
        for (int k = 0; k < m.n(); ++k) {
          const auto& t = m.drivers.components[k].table;
          Vec c(t.size());
          for (size_t j = 0; j < t.size(); ++j) c[j] = t[j].rho * t[j].x * m.mpr.psi(y, t[j].x);
          last_.values.array() += vs_.gamma[k].values.array() * (expo_[k] * c).array();
        }
      }
    } else {
      last_ = alpha(m, h_, y, vs_);
    }
    last_y_ = y;
    have_last_ = true;
    return last_;
  }

 private:
  const ModelSpec* m_;
  VolState vs_;
  ForwardCurve h_;
  ForwardCurve alpha0_, last_;
  std::vector<Mat> expo_;
  bool all_tables_ = false;
  bool have_last_ = false;
  double last_y_ = 0.0;
};

inline ForwardCurve step_with(const ForwardCurve& curve, const ForwardCurve& a, const VolState& vs,
                              double dt, const StepIncrement& inc) {
  Vec v = curve.values + dt * a.values;
  for (size_t k = 0; k < vs.sigma.size(); ++k) v += inc.dW[k] * vs.sigma[k].values;
  for (size_t k = 0; k < vs.gamma.size(); ++k)
    if (inc.dX[k] != 0.0) v += inc.dX[k] * vs.gamma[k].values;
  if (!v.allFinite()) throw PathAbort("non-finite forward curve during step");
  return shift(ForwardCurve{curve.grid, std::move(v)}, dt);
}

inline ForwardCurve step(const ModelSpec& m, const ForwardCurve& curve, double y, double dt,
                         const StepIncrement& inc) {
  VolState vs = vol_state(m, curve);
  return step_with(curve, alpha(m, curve, y, vs), vs, dt, inc);
}

struct SimOptions {
  double t_max = 1.0;
  double dt = 0.01;
  int n_paths = 100;
  std::uint64_t seed = 1;
  std::vector<double> maturities;
  int record_every = 1;
  bool keep_curves = false;
  int threads = 1;
  StateProcessSpec state;
  double z0 = 1.0;
};

struct SimulationPath {
  std::vector<double> times, R, B, gop, Z, Y;
  std::vector<std::vector<double>> bonds;        // [time][maturity]
  std::vector<std::vector<double>> benchmarked;  // P / GOP
  std::vector<ForwardCurve> curves;
  long floor_hits = 0;
};

inline long step_count(double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0)) throw DomainError("need dt > 0 and t_max >= 0");
  return std::lround(t_max / dt);
}

inline SimulationPath simulate_path(const ModelSpec& m, const ForwardCurve& h0, const SimOptions& o,
                                    int path_index) {
  const long n_steps = step_count(o.t_max, o.dt);
  const int every = std::max(1, o.record_every);
  const bool bessel = o.state.kind == StateProcessSpec::Kind::bessel_inverse;
  if (bessel && m.d() < 1) throw ConfigError("bessel state needs a Wiener driver");
  const bool fixed_vols = !m.state_dependent_vols();

  DriverSampler sampler(m.drivers, o.dt, path_seed(o.seed, static_cast<std::uint64_t>(path_index)));
  std::optional<BesselInverse> bes;
  if (bessel) bes.emplace(o.state.y0);
  std::optional<DriftCache> cache;
  if (fixed_vols) cache.emplace(m, h0);

  SimulationPath p;
  ForwardCurve r = h0;
  double y = o.state.y0;
  double log_b = 0.0, log_s = 0.0;
  DensityZ z(o.z0);
  StepIncrement inc;

  auto record = [&](long i) {
    double t = i * o.dt;
    p.times.push_back(t);
    p.R.push_back(r.at0());
    double B = std::exp(log_b), S = std::exp(log_s);
    p.B.push_back(B);
    p.gop.push_back(S);
    p.Z.push_back(z.value());
    p.Y.push_back(y);
    std::vector<double> P, bm;
    for (double T : o.maturities) {
      double tau = T - t;
      if (tau < -1e-12 || tau > m.grid->xi_max()) {
        P.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        P.push_back(bond_price(r, std::max(tau, 0.0)));
      }
      bm.push_back(P.back() / S);
    }
    p.bonds.push_back(std::move(P));
    p.benchmarked.push_back(std::move(bm));
    if (o.keep_curves) p.curves.push_back(r);
  };

  record(0);
  for (long i = 0; i < n_steps; ++i) {
    sampler.next(inc);
    std::optional<VolState> local;
    if (!fixed_vols) local.emplace(vol_state(m, r));
    const VolState& vs = fixed_vols ? cache->vols() : *local;
    ForwardCurve a_local;
    const ForwardCurve& a = fixed_vols ? (*cache)(y) : (a_local = alpha(m, r, y, vs));

    double accr = -std::log(bond_price(r, o.dt));
    log_b += accr;

    double th2 = 0.0, th_dw = 0.0, psi_int = 0.0, log_phi = 0.0;
    std::vector<double> th(m.d());
    for (int k = 0; k < m.d(); ++k) {
      th[k] = m.mpr.theta(y, k);
      th2 += th[k] * th[k];
      th_dw += th[k] * inc.dW[k];
    }
    if (!m.mpr.psi_zero()) {
      for (int k = 0; k < m.n(); ++k) {
        const auto& spec = m.drivers.components[k];
        psi_int += psi_integral(m.mpr, spec, y);
        if (!spec.is_table()) throw Unsupported("nonzero Psi with an infinite-activity driver cannot be simulated");
        for (double x : inc.jumps[k]) {
          double psi = m.mpr.psi(y, x);
          log_phi += std::log1p(-psi);
          z.jump(psi);
        }
      }
    }
    log_s += accr + (0.5 * th2 - psi_int) * o.dt + th_dw - log_phi;
    z.diffuse(th, inc.dW, o.dt);
    z.compensate(psi_int * o.dt);

    r = step_with(r, a, vs, o.dt, inc);
    if (bes) {
      bes->step(inc.dW[0], o.dt);
      y = bes->y();
    }
    if ((i + 1) % every == 0 || i + 1 == n_steps) record(i + 1);
  }
  if (bes) p.floor_hits = bes->floor_hits;
  return p;
}

inline std::vector<SimulationPath> simulate(const ModelSpec& m, const ForwardCurve& h0, const SimOptions& o) {
  m.validate();
  require_same_grid(h0, ForwardCurve::zero(m.grid));
  std::vector<SimulationPath> paths(o.n_paths);
  parallel_for(o.n_paths, o.threads, [&](int i) { paths[i] = simulate_path(m, h0, o, i); });
  return paths;
}

struct MartingaleStat {
  double mean, se, z;
  int n;
};

enum class Quantity { discounted_bond, benchmarked_bond, density, benchmarked_bank };

inline double quantity_at(const SimulationPath& p, Quantity q, int mat, size_t j) {
  switch (q) {
    case Quantity::discounted_bond: return p.bonds[j][mat] / p.B[j];
    case Quantity::benchmarked_bond: return p.benchmarked[j][mat];
    case Quantity::density: return p.Z[j];
    case Quantity::benchmarked_bank: return p.B[j] / p.gop[j];
  }
  return 0.0;
}

// cross-path mean and standard error of q_t - q_0
inline MartingaleStat martingale_statistic(const std::vector<SimulationPath>& paths, Quantity q, double t,
                                           int maturity_index = 0) {
  const int n = static_cast<int>(paths.size());
  if (n < 30) throw UnderpoweredError("martingale statistic needs at least 30 paths");
  const auto& times = paths[0].times;
  size_t j = times.size();
  for (size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, t)) j = i;
  if (j == times.size()) throw DomainError("martingale statistic: t not on the recorded grid");
  double mean = 0.0, m2 = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i) {  // Welford
    double v = quantity_at(paths[i], q, maturity_index, j) - quantity_at(paths[i], q, maturity_index, 0);
    scale = std::max(scale, std::abs(quantity_at(paths[i], q, maturity_index, 0)));
    double d = v - mean;
    mean += d / (i + 1);
    m2 += d * (v - mean);
  }
  double se = std::sqrt(m2 / (n - 1) / n);
  double z;
  if (se > 0.0)
    z = mean / se;
  else
    z = std::abs(mean) <= 64 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0)
            ? 0.0
            : std::copysign(std::numeric_limits<double>::infinity(), mean);
  return {mean, se, z, n};
}

}  // namespace hjmm
