#pragma once

// Wiener and pure-jump drivers: Levy measures, cumulants, increment sampling.

#include <boost/math/special_functions/factorials.hpp>
#include <boost/random/discrete_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "hjmm/errors.hpp"

namespace hjmm {

struct JumpAtom {
  double x;
  double rho;
};

struct BilateralGammaParams {
  double alpha_p, lambda_p, alpha_m, lambda_m;
};

constexpr int kMaxCumulantOrder = 12;

struct LevyComponentSpec {
  enum class Kind { table, bilateral_gamma };

  Kind kind = Kind::table;
  bool compensated = false;
  std::vector<JumpAtom> table;
  BilateralGammaParams bg{};

  static LevyComponentSpec jump_table(std::vector<JumpAtom> atoms, bool compensated = false) {
    LevyComponentSpec s;
    s.kind = Kind::table;
    s.table = std::move(atoms);
    s.compensated = compensated;
    s.validate();
    return s;
  }
  static LevyComponentSpec bilateral_gamma(BilateralGammaParams p, bool compensated = false) {
    LevyComponentSpec s;
    s.kind = Kind::bilateral_gamma;
    s.bg = p;
    s.compensated = compensated;
    s.validate();
    return s;
  }

  bool is_table() const { return kind == Kind::table; }

  void validate() const {
    if (is_table()) {
      if (table.empty()) throw DomainError("jump table is empty");
      for (size_t i = 0; i < table.size(); ++i) {
        if (table[i].x == 0.0 || !std::isfinite(table[i].x)) throw DomainError("jump size must be finite and nonzero");
        if (!(table[i].rho > 0.0) || !std::isfinite(table[i].rho)) throw DomainError("jump intensity must be positive");
        for (size_t j = 0; j < i; ++j)
          if (table[j].x == table[i].x) throw DomainError("jump sizes must be distinct");
      }
    } else {
      if (!(bg.alpha_p > 0 && bg.lambda_p > 0 && bg.alpha_m > 0 && bg.lambda_m > 0))
        throw DomainError("bilateral gamma parameters must be positive");
    }
  }

  double total_intensity() const {
    if (!is_table()) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (const auto& a : table) s += a.rho;
    return s;
  }

  // int x F(dx)
  double mean_jump() const {
    if (!is_table()) return bg.alpha_p / bg.lambda_p - bg.alpha_m / bg.lambda_m;
    double s = 0.0;
    for (const auto& a : table) s += a.rho * a.x;
    return s;
  }

  // closed admissible interval for z, already shrunk to a safe interior
  double z_lo() const {
    return is_table() ? -std::numeric_limits<double>::infinity() : -bg.lambda_m * (1.0 - 1e-9);
  }
  double z_hi() const {
    return is_table() ? std::numeric_limits<double>::infinity() : bg.lambda_p * (1.0 - 1e-9);
  }
  bool admissible(double z) const { return z >= z_lo() && z <= z_hi() && std::isfinite(z); }

  void require_admissible(double z) const {
    if (!admissible(z)) throw DomainError("cumulant argument " + std::to_string(z) + " outside admissible interval");
  }
};

// Derivative of int (e^{zx} - 1) F(dx) of the given order, ignoring any
// compensation flag. Order 0 is the function itself.
inline double cumulant_raw(const LevyComponentSpec& s, double z, int order) {
  s.require_admissible(z);
  if (order < 0 || order > kMaxCumulantOrder) throw DomainError("cumulant order outside [0, 12]");
  if (s.is_table()) {
    double acc = 0.0;
    for (const auto& a : s.table) {
      double e = std::exp(z * a.x);
      acc += a.rho * (order == 0 ? e - 1.0 : std::pow(a.x, order) * e);
    }
    return acc;
  }
  const auto& p = s.bg;
  if (order == 0)
    return p.alpha_p * std::log(p.lambda_p / (p.lambda_p - z)) + p.alpha_m * std::log(p.lambda_m / (p.lambda_m + z));
  double f = boost::math::factorial<double>(static_cast<unsigned>(order - 1));
  double sgn = order % 2 == 0 ? 1.0 : -1.0;
  return p.alpha_p * f / std::pow(p.lambda_p - z, order) + sgn * p.alpha_m * f / std::pow(p.lambda_m + z, order);
}

inline double cumulant(const LevyComponentSpec& s, double z) {
  double k = cumulant_raw(s, z, 0);
  return s.compensated ? k - z * s.mean_jump() : k;
}

inline double cumulant_deriv(const LevyComponentSpec& s, double z, int order) {
  if (order < 1) throw DomainError("cumulant_deriv: order must be positive");
  double k = cumulant_raw(s, z, order);
  return (s.compensated && order == 1) ? k - s.mean_jump() : k;
}

// Seed of path `index` in a run seeded with `seed`. Mixed rather than added so
// that runs with neighbouring seeds do not share paths.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) + index);
}

struct DriverConfig {
  int d = 0;
  std::vector<LevyComponentSpec> components;

  int n() const { return static_cast<int>(components.size()); }
  void validate() const {
    if (d < 0) throw DomainError("negative Wiener dimension");
    if (d + n() < 1) throw DomainError("need at least one driver");
    for (const auto& c : components) c.validate();
  }
};

// One time step of driver noise. jumps[k] lists the individual jump sizes of
// table component k (empty for bilateral gamma, whose paths are not split).
struct StepIncrement {
  std::vector<double> dW;
  std::vector<double> dX;
  std::vector<std::vector<double>> jumps;
};

class DriverSampler {
 public:
  DriverSampler(const DriverConfig& cfg, double dt, std::uint64_t seed)
      : cfg_(&cfg), dt_(dt), rng_(seed), normal_(0.0, std::sqrt(dt)) {
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    for (const auto& c : cfg.components) {
      Comp k;
      if (c.is_table()) {
        std::vector<double> w;
        for (const auto& a : c.table) w.push_back(a.rho);
        k.count = boost::random::poisson_distribution<int, double>(c.total_intensity() * dt);
        k.size = boost::random::discrete_distribution<int, double>(w.begin(), w.end());
      } else {
        k.gp = boost::random::gamma_distribution<double>(c.bg.alpha_p * dt, 1.0 / c.bg.lambda_p);
        k.gm = boost::random::gamma_distribution<double>(c.bg.alpha_m * dt, 1.0 / c.bg.lambda_m);
      }
      k.drift = c.compensated ? c.mean_jump() * dt : 0.0;
      comps_.push_back(k);
    }
  }

  double dt() const { return dt_; }

  void next(StepIncrement& out) {
    const int n = cfg_->n();
    out.dW.resize(cfg_->d);
    out.dX.resize(n);
    out.jumps.resize(n);
    for (int i = 0; i < cfg_->d; ++i) out.dW[i] = normal_(rng_);
    for (int k = 0; k < n; ++k) {
      const auto& spec = cfg_->components[k];
      auto& c = comps_[k];
      out.jumps[k].clear();
      double x = 0.0;
      if (spec.is_table()) {
        int cnt = c.count(rng_);
        for (int j = 0; j < cnt; ++j) {
          double size = spec.table[c.size(rng_)].x;
          out.jumps[k].push_back(size);
          x += size;
        }
      } else {
        x = c.gp(rng_) - c.gm(rng_);
      }
      out.dX[k] = x - c.drift;
    }
  }

  StepIncrement next() {
    StepIncrement s;
    next(s);
    return s;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  struct Comp {
    boost::random::poisson_distribution<int, double> count;
    boost::random::discrete_distribution<int, double> size;
    boost::random::gamma_distribution<double> gp, gm;
    double drift = 0.0;
  };
  const DriverConfig* cfg_;
  double dt_;
  std::mt19937_64 rng_;
  boost::random::normal_distribution<double> normal_;
  std::vector<Comp> comps_;
};

inline std::vector<StepIncrement> sample_increments(const DriverConfig& cfg, double dt, int n_steps,
                                                    std::uint64_t seed) {
  DriverSampler s(cfg, dt, seed);
  std::vector<StepIncrement> out(n_steps);
  for (auto& x : out) s.next(x);
  return out;
}

}  // namespace hjmm
