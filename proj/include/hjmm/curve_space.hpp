#pragma once

// Forward curves as grid samples of the weighted space H_w with
//   |h|^2 = h(0)^2 + int h'(xi)^2 w(xi) dxi,   w(xi) = exp(alpha xi).
// Derivatives are second-order finite differences, integrals trapezoid.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hjmm/errors.hpp"

namespace hjmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class CurveGrid {
 public:
  CurveGrid(double xi_max = 30.0, int n_points = 601, double weight_alpha = 0.1)
      : xi_max_(xi_max), n_(n_points), alpha_(weight_alpha) {
    if (!(xi_max > 0) || !std::isfinite(xi_max)) throw DomainError("grid: xi_max must be positive");
    if (n_points < 5) throw DomainError("grid: need at least 5 points");
    if (!(weight_alpha > 0)) throw DomainError("grid: weight_alpha must be positive");
    dx_ = xi_max / (n_points - 1);
    nodes_.resize(n_);
    w_.resize(n_);
    q_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      nodes_[i] = i == n_ - 1 ? xi_max : i * dx_;
      w_[i] = std::exp(alpha_ * nodes_[i]);
      q_[i] = (i == 0 || i == n_ - 1) ? 0.5 * dx_ : dx_;
    }
  }

  double xi_max() const { return xi_max_; }
  int size() const { return n_; }
  double step() const { return dx_; }
  double weight_alpha() const { return alpha_; }
  const Vec& nodes() const { return nodes_; }
  double node(int i) const { return nodes_[i]; }
  const Vec& weight() const { return w_; }
  // trapezoid weights
  const Vec& quad() const { return q_; }

  bool same_as(const CurveGrid& o) const {
    return n_ == o.n_ && xi_max_ == o.xi_max_ && alpha_ == o.alpha_;
  }

  // grid with 2(n-1)+1 points on the same interval
  CurveGrid refined() const { return CurveGrid(xi_max_, 2 * (n_ - 1) + 1, alpha_); }

 private:
  double xi_max_;
  int n_;
  double alpha_;
  double dx_;
  Vec nodes_, w_, q_;
};

using GridPtr = std::shared_ptr<const CurveGrid>;

inline GridPtr make_grid(double xi_max = 30.0, int n_points = 601, double weight_alpha = 0.1) {
  return std::make_shared<const CurveGrid>(xi_max, n_points, weight_alpha);
}

struct ForwardCurve {
  GridPtr grid;
  Vec values;

  ForwardCurve() = default;
  ForwardCurve(GridPtr g, Vec v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw InvalidCurve("curve without grid");
    if (values.size() != grid->size()) throw InvalidCurve("curve length does not match grid");
  }

  static ForwardCurve zero(const GridPtr& g) { return {g, Vec::Zero(g->size())}; }
  static ForwardCurve constant(const GridPtr& g, double c) { return {g, Vec::Constant(g->size(), c)}; }
  static ForwardCurve from(const GridPtr& g, const std::function<double(double)>& f) {
    Vec v(g->size());
    for (int i = 0; i < g->size(); ++i) v[i] = f(g->node(i));
    return {g, std::move(v)};
  }

  int size() const { return static_cast<int>(values.size()); }
  double at0() const { return values[0]; }
  bool finite() const { return values.allFinite(); }

  ForwardCurve& operator+=(const ForwardCurve& o) { values += o.values; return *this; }
  ForwardCurve& operator-=(const ForwardCurve& o) { values -= o.values; return *this; }
  ForwardCurve& operator*=(double s) { values *= s; return *this; }
};

inline ForwardCurve operator+(ForwardCurve a, const ForwardCurve& b) { return a += b; }
inline ForwardCurve operator-(ForwardCurve a, const ForwardCurve& b) { return a -= b; }
inline ForwardCurve operator*(double s, ForwardCurve a) { return a *= s; }

inline void require_same_grid(const ForwardCurve& a, const ForwardCurve& b) {
  if (a.grid != b.grid && !(a.grid && b.grid && a.grid->same_as(*b.grid)))
    throw GridMismatch("curves live on different grids");
}

inline void require_finite(const ForwardCurve& c) {
  if (!c.finite()) throw InvalidCurve("curve has non-finite values");
}

// ---- finite differences and quadrature on a uniform grid

inline Vec fd_derivative(const Vec& f, double dx) {
  const Eigen::Index n = f.size();
  Vec d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
  return d;
}

inline Vec cumulative_trapezoid(const Vec& f, double dx) {
  Vec c(f.size());
  c[0] = 0.0;
  for (Eigen::Index i = 1; i < f.size(); ++i) c[i] = c[i - 1] + 0.5 * dx * (f[i - 1] + f[i]);
  return c;
}

// cumulative integral, each cell integrated exactly for the quadratic through
// three neighbouring samples; third order overall
inline Vec cumulative_quadratic(const Vec& f, double dx) {
  const Eigen::Index n = f.size();
  Vec c(n);
  c[0] = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    double cell = i + 1 < n ? (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1])
                            : (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    c[i] = c[i - 1] + dx * cell / 12.0;
  }
  return c;
}

inline double trapezoid(const Vec& f, double dx) {
  const Eigen::Index n = f.size();
  return dx * (f.sum() - 0.5 * (f[0] + f[n - 1]));
}

// ---- monotone cubic (Fritsch-Carlson) interpolation

namespace detail {

inline double pchip_edge(double h0, double h1, double d0, double d1) {
  double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (std::signbit(d) != std::signbit(d0) || d0 == 0.0) return 0.0;
  if (std::signbit(d0) != std::signbit(d1) && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
  return d;
}

}  // namespace detail

inline Vec pchip_slopes(const Vec& f, double dx) {
  const Eigen::Index n = f.size();
  Vec del(n - 1), m(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) del[i] = (f[i + 1] - f[i]) / dx;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (del[i - 1] * del[i] <= 0.0)
      m[i] = 0.0;
    else
      m[i] = 2.0 / (1.0 / del[i - 1] + 1.0 / del[i]);
  }
  if (n == 2) {
    m[0] = m[1] = del[0];
  } else {
    m[0] = detail::pchip_edge(dx, dx, del[0], del[1]);
    m[n - 1] = detail::pchip_edge(dx, dx, del[n - 2], del[n - 3]);
  }
  return m;
}

inline double hermite_cell(double f0, double f1, double m0, double m1, double dx, double s) {
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * dx * m0 + (-2 * s3 + 3 * s2) * f1 +
         (s3 - s2) * dx * m1;
}

// exact integral over [0, s*dx] of the cubic Hermite cell
inline double hermite_cell_integral(double f0, double f1, double m0, double m1, double dx, double s) {
  double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  return dx * ((0.5 * s4 - s3 + s) * f0 + (0.25 * s4 - 2.0 / 3.0 * s3 + 0.5 * s2) * dx * m0 +
               (-0.5 * s4 + s3) * f1 + (0.25 * s4 - s3 / 3.0) * dx * m1);
}

// evaluates the interpolant at xi, constant past xi_max
inline double interpolate(const ForwardCurve& c, const Vec& slopes, double xi) {
  const auto& g = *c.grid;
  if (xi >= g.xi_max()) return c.values[g.size() - 1];
  if (xi <= 0.0) return c.values[0];
  double u = xi / g.step();
  auto k = static_cast<Eigen::Index>(u);
  if (k >= g.size() - 1) k = g.size() - 2;
  double s = u - static_cast<double>(k);
  return hermite_cell(c.values[k], c.values[k + 1], slopes[k], slopes[k + 1], g.step(), s);
}

inline double interpolate(const ForwardCurve& c, double xi) {
  return interpolate(c, pchip_slopes(c.values, c.grid->step()), xi);
}

// ---- the H_w operations

inline double inner_product(const ForwardCurve& a, const ForwardCurve& b) {
  require_same_grid(a, b);
  const auto& g = *a.grid;
  Vec da = fd_derivative(a.values, g.step());
  Vec db = fd_derivative(b.values, g.step());
  return a.values[0] * b.values[0] + (g.quad().array() * g.weight().array() * da.array() * db.array()).sum();
}

inline double h_norm(const ForwardCurve& h) {
  require_finite(h);
  return std::sqrt(std::max(0.0, inner_product(h, h)));
}

// coordinates whose Euclidean inner product is the H_w inner product
inline Vec h_features(const ForwardCurve& h) {
  const auto& g = *h.grid;
  Vec d = fd_derivative(h.values, g.step());
  Vec f(g.size() + 1);
  f[0] = h.values[0];
  f.tail(g.size()) = (g.quad().array() * g.weight().array()).sqrt() * d.array();
  return f;
}

inline ForwardCurve derivative(const ForwardCurve& h) {
  return {h.grid, fd_derivative(h.values, h.grid->step())};
}

// xi -> -int_0^xi vol
inline ForwardCurve integrated_vol(const ForwardCurve& vol) {
  return {vol.grid, -cumulative_trapezoid(vol.values, vol.grid->step())};
}

// true when t is (to rounding) an integer number of grid steps
inline bool on_grid_shift(const CurveGrid& g, double t, long* k = nullptr) {
  double u = t / g.step();
  double r = std::round(u);
  bool ok = std::abs(u - r) <= 1e-9 * std::max(1.0, u);
  if (ok && k) *k = static_cast<long>(r);
  return ok;
}

inline ForwardCurve shift(const ForwardCurve& h, double t) {
  if (!(t >= 0.0)) throw DomainError("shift: t must be nonnegative");
  const auto& g = *h.grid;
  const int n = g.size();
  Vec out(n);
  long k = 0;
  if (on_grid_shift(g, t, &k)) {
    for (int i = 0; i < n; ++i) out[i] = h.values[std::min<long>(i + k, n - 1)];
    return {h.grid, std::move(out)};
  }
  Vec m = pchip_slopes(h.values, g.step());
  for (int i = 0; i < n; ++i) out[i] = interpolate(h, m, g.node(i) + t);
  return {h.grid, std::move(out)};
}

// resample onto another grid over a common interval
inline ForwardCurve resample(const ForwardCurve& h, const GridPtr& target) {
  Vec m = pchip_slopes(h.values, h.grid->step());
  Vec out(target->size());
  for (int i = 0; i < target->size(); ++i) out[i] = interpolate(h, m, target->node(i));
  return {target, std::move(out)};
}

}  // namespace hjmm
