#pragma once

// Market prices of risk (Theta, Psi), Phi = 1 - Psi, and the state process Y.

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hjmm/levy_drivers.hpp"

namespace hjmm {

// y -> vartheta(y)
struct VarthetaSpec {
  enum class Kind { linear, constant, sqrt_ };
  Kind kind = Kind::linear;
  double a = 0.0;

  double operator()(double y) const {
    switch (kind) {
      case Kind::linear: return a * y;
      case Kind::constant: return a;
      case Kind::sqrt_:
        if (y < 0.0) throw DomainError("vartheta sqrt: negative state");
        return a * std::sqrt(y);
    }
    return 0.0;
  }
};

// x -> xi(x) for the product form Phi = exp(vartheta(y) xi(x))
struct XiMapSpec {
  enum class Kind { identity, linear, cube };
  Kind kind = Kind::identity;
  double c = 1.0;

  double operator()(double x) const {
    switch (kind) {
      case Kind::identity: return x;
      case Kind::linear: return c * x;
      case Kind::cube: return x * x * x;
    }
    return x;
  }
};

struct MprFamily {
  enum class ThetaKind { zero, constant_vector, bessel_sqrt };
  enum class PsiKind { zero, constant_in_x, exp_in_x, product_form };

  ThetaKind theta_kind = ThetaKind::zero;
  std::vector<double> theta_const;  // one entry broadcasts to all components
  PsiKind psi_kind = PsiKind::zero;
  VarthetaSpec vartheta;
  XiMapSpec xi_map;
  std::vector<double> y_samples{0.0};
  double y_star = 0.0;

  bool at_star(double y) const { return y == y_star; }
  bool psi_zero() const { return psi_kind == PsiKind::zero; }
  bool theta_zero() const { return theta_kind == ThetaKind::zero; }

  double theta(double y, int k) const {
    if (at_star(y)) return 0.0;
    switch (theta_kind) {
      case ThetaKind::zero: return 0.0;
      case ThetaKind::constant_vector:
        if (theta_const.empty()) return 0.0;
        return theta_const.size() == 1 ? theta_const[0] : theta_const.at(k);
      case ThetaKind::bessel_sqrt:
        if (y < 0.0) throw DomainError("bessel theta: negative state");
        return 2.0 * std::sqrt(y);
    }
    return 0.0;
  }

  std::vector<double> theta_vector(double y, int d) const {
    std::vector<double> t(d);
    for (int k = 0; k < d; ++k) t[k] = theta(y, k);
    return t;
  }

  // Phi(y, x) = 1 - Psi(y, x)
  double phi(double y, double x) const {
    if (at_star(y)) return 1.0;
    switch (psi_kind) {
      case PsiKind::zero: return 1.0;
      case PsiKind::constant_in_x: return 1.0 + y;
      case PsiKind::exp_in_x: return std::exp(x * vartheta(y));
      case PsiKind::product_form: return std::exp(vartheta(y) * xi_map(x));
    }
    return 1.0;
  }

  double psi(double y, double x) const {
    if (at_star(y)) return 0.0;
    switch (psi_kind) {
      case PsiKind::zero: return 0.0;
      case PsiKind::constant_in_x: return -y;
      case PsiKind::exp_in_x: return -std::expm1(x * vartheta(y));
      case PsiKind::product_form: return -std::expm1(vartheta(y) * xi_map(x));
    }
    return 0.0;
  }

  // exponent e such that Phi(y, x) = exp(e x) for every x, when Phi has that form
  bool exp_form(double y, double* e) const {
    if (at_star(y) || psi_kind == PsiKind::zero) { *e = 0.0; return true; }
    if (psi_kind == PsiKind::exp_in_x) { *e = vartheta(y); return true; }
    if (psi_kind == PsiKind::product_form && xi_map.kind != XiMapSpec::Kind::cube) {
      *e = vartheta(y) * (xi_map.kind == XiMapSpec::Kind::linear ? xi_map.c : 1.0);
      return true;
    }
    return false;
  }

  void validate(const DriverConfig& drivers) const {
    if (y_samples.empty()) throw ConfigError("y_samples must not be empty");
    bool has_star = false;
    for (double y : y_samples) has_star = has_star || at_star(y);
    if (!has_star) throw ConfigError("y_samples must contain y*");
    if (theta_kind == ThetaKind::constant_vector && theta_const.size() > 1 &&
        static_cast<int>(theta_const.size()) != drivers.d)
      throw ConfigError("theta vector length differs from Wiener count");
    for (double y : y_samples) {
      if (theta_kind == ThetaKind::bessel_sqrt && y < 0.0) throw ConfigError("bessel theta needs y >= 0");
      for (const auto& c : drivers.components) {
        if (!c.is_table()) continue;
        for (const auto& a : c.table) {
          double p = phi(y, a.x);
          if (!(p > 0.0) || !std::isfinite(p))
            throw ConfigError("Psi must stay below 1 on the jump support (y=" + std::to_string(y) + ")");
        }
      }
    }
  }
};

// int Psi(y, x) F(dx)
inline double psi_integral(const MprFamily& m, const LevyComponentSpec& s, double y) {
  if (m.at_star(y) || m.psi_zero()) return 0.0;
  if (s.is_table()) {
    double acc = 0.0;
    for (const auto& a : s.table) acc += a.rho * m.psi(y, a.x);
    return acc;
  }
  double e;
  if (!m.exp_form(y, &e)) throw Unsupported("Psi integral against an infinite-activity measure needs an exponential Phi");
  return -cumulant_raw(s, e, 0);
}

struct StateProcessSpec {
  enum class Kind { frozen, bessel_inverse };
  Kind kind = Kind::frozen;
  double y0 = 0.0;
  double dt = 0.01;
};

// Y = 1/B with B a squared Bessel process of dimension four,
// dB = 4 dt + 2 sqrt(B) dW, full-truncation Euler.
struct BesselInverse {
  double b;
  long floor_hits = 0;

  explicit BesselInverse(double y0) : b(1.0 / y0) {
    if (!(y0 > 0.0)) throw DomainError("bessel state needs y0 > 0");
  }
  double y() const { return 1.0 / std::max(b, 1e-300); }
  void step(double dW, double dt) {
    b = b + 4.0 * dt + 2.0 * std::sqrt(std::max(b, 0.0)) * dW;
    if (b <= 0.0) ++floor_hits;
  }
};

struct StatePath {
  std::vector<double> y;
  std::vector<double> dW;
  long floor_hits = 0;
};

inline StatePath simulate_state(const StateProcessSpec& spec, double t_max, std::uint64_t seed) {
  if (!(spec.dt > 0.0)) throw DomainError("state dt must be positive");
  const auto n = static_cast<long>(std::llround(t_max / spec.dt));
  StatePath p;
  p.y.reserve(n + 1);
  p.y.push_back(spec.y0);
  if (spec.kind == StateProcessSpec::Kind::frozen) {
    p.y.assign(n + 1, spec.y0);
    return p;
  }
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> nd(0.0, std::sqrt(spec.dt));
  BesselInverse b(spec.y0);
  p.dW.reserve(n);
  for (long i = 0; i < n; ++i) {
    double dw = nd(rng);
    p.dW.push_back(dw);
    b.step(dw, spec.dt);
    p.y.push_back(b.y());
  }
  p.floor_hits = b.floor_hits;
  return p;
}

// Multiplicative Euler for Z = E(-theta . W - psi * (mu - nu)), kept in logs.
struct DensityZ {
  double log_z = 0.0;

  explicit DensityZ(double z0 = 1.0) : log_z(std::log(z0)) {}
  void diffuse(const std::vector<double>& theta, const std::vector<double>& dW, double dt) {
    for (size_t k = 0; k < theta.size(); ++k) log_z += -theta[k] * dW[k] - 0.5 * theta[k] * theta[k] * dt;
  }
  void jump(double psi_x) { log_z += std::log1p(-psi_x); }
  // dt * int psi dF
  void compensate(double psi_int_dt) { log_z += psi_int_dt; }
  double value() const { return std::exp(log_z); }
};

// theta_path[n] and psi_at_jumps[n] (Psi at each jump of step n, all
// components pooled) and psi_int[n] = sum_k int Psi^k dF^k, all taken at the
// left end of step n.
inline std::vector<double> density_candidate_Z(const std::vector<std::vector<double>>& theta_path,
                                               const std::vector<std::vector<double>>& psi_at_jumps,
                                               const std::vector<double>& psi_int,
                                               const std::vector<StepIncrement>& inc, double dt,
                                               double z0 = 1.0) {
  const size_t n = inc.size();
  if (theta_path.size() != n || psi_at_jumps.size() != n || psi_int.size() != n)
    throw DomainError("density_candidate_Z: misaligned time grids");
  DensityZ z(z0);
  std::vector<double> out{z.value()};
  for (size_t i = 0; i < n; ++i) {
    z.diffuse(theta_path[i], inc[i].dW, dt);
    for (double p : psi_at_jumps[i]) z.jump(p);
    z.compensate(psi_int[i] * dt);
    out.push_back(z.value());
  }
  return out;
}

}  // namespace hjmm
