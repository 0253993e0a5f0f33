#pragma once

// The squared-Bessel market price of risk end to end: Y = 1/B with B a
// four-dimensional squared Bessel process, theta = 2 sqrt(Y), and the density
// candidate Z, which should coincide with Y when Z_0 = Y_0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hjmm/mpr.hpp"
#include "hjmm/parallel.hpp"

namespace hjmm {

struct PathErrorSummary {
  double mean = 0.0, median = 0.0, q99 = 0.0, worst = 0.0;
};

inline PathErrorSummary summarize(std::vector<double> e) {
  PathErrorSummary s;
  if (e.empty()) return s;
  std::sort(e.begin(), e.end());
  for (double x : e) s.mean += x;
  s.mean /= static_cast<double>(e.size());
  s.median = e[e.size() / 2];
  s.q99 = e[std::min(e.size() - 1, e.size() * 99 / 100)];
  s.worst = e.back();
  return s;
}

struct BesselIdentity {
  double dt = 0.0;
  int paths = 0;
  PathErrorSummary coarse, fine;  // sup_t |Z - Y| / Y per path, at dt and dt/refine
  double contraction = 0.0;       // coarse.mean / fine.mean
};

// Both schemes see the same Brownian path: fine increments are summed into
// the coarse ones.
inline BesselIdentity bessel_identity(double y0, double t_max, double dt, int n_paths, std::uint64_t seed,
                                      int refine = 4, int threads = 1) {
  if (refine < 1) throw DomainError("refine must be positive");
  const long n = std::lround(t_max / dt);
  const double dtf = dt / refine;
  std::vector<double> ec(n_paths), ef(n_paths);
  parallel_for(n_paths, threads, [&](int p) {
    std::mt19937_64 rng(path_seed(seed, static_cast<std::uint64_t>(p)));
    boost::random::normal_distribution<double> nd(0.0, std::sqrt(dtf));
    BesselInverse bc(y0), bf(y0);
    DensityZ zc(y0), zf(y0);
    double mc = 0.0, mf = 0.0;
    for (long i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int r = 0; r < refine; ++r) {
        double w = nd(rng);
        sum += w;
        zf.diffuse({2.0 * std::sqrt(bf.y())}, {w}, dtf);
        bf.step(w, dtf);
        mf = std::max(mf, std::abs(zf.value() - bf.y()) / bf.y());
      }
      zc.diffuse({2.0 * std::sqrt(bc.y())}, {sum}, dt);
      bc.step(sum, dt);
      mc = std::max(mc, std::abs(zc.value() - bc.y()) / bc.y());
    }
    ec[p] = mc;
    ef[p] = mf;
  });
  BesselIdentity r;
  r.dt = dt;
  r.paths = n_paths;
  r.coarse = summarize(ec);
  r.fine = summarize(ef);
  r.contraction = r.fine.mean > 0.0 ? r.coarse.mean / r.fine.mean : 0.0;
  return r;
}

struct SupermartingaleCheck {
  double z0 = 0.0;
  double mean_Z = 0.0, se_Z = 0.0;
  double mean_Y = 0.0, se_Y = 0.0;
  long floor_hits = 0;
  int paths = 0;
  // (z0 - mean) / se
  double deficit_Z() const { return se_Z > 0.0 ? (z0 - mean_Z) / se_Z : 0.0; }
  double deficit_Y() const { return se_Y > 0.0 ? (z0 - mean_Y) / se_Y : 0.0; }
};

inline SupermartingaleCheck bessel_supermartingale(double y0, double t_max, double dt, int n_paths,
                                                   std::uint64_t seed, int threads = 1) {
  if (n_paths < 30) throw UnderpoweredError("supermartingale check needs at least 30 paths");
  const long n = std::lround(t_max / dt);
  std::vector<double> z(n_paths), y(n_paths);
  std::vector<long> hits(n_paths);
  parallel_for(n_paths, threads, [&](int p) {
    std::mt19937_64 rng(path_seed(seed, static_cast<std::uint64_t>(p)));
    boost::random::normal_distribution<double> nd(0.0, std::sqrt(dt));
    BesselInverse b(y0);
    DensityZ zz(y0);
    for (long i = 0; i < n; ++i) {
      double w = nd(rng);
      zz.diffuse({2.0 * std::sqrt(b.y())}, {w}, dt);
      b.step(w, dt);
    }
    z[p] = zz.value();
    y[p] = b.y();
    hits[p] = b.floor_hits;
  });
  auto mean_se = [](const std::vector<double>& v, double& m, double& se) {
    m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    se = std::sqrt(ss / (v.size() - 1) / v.size());
  };
  SupermartingaleCheck c;
  c.z0 = y0;
  c.paths = n_paths;
  mean_se(z, c.mean_Z, c.se_Z);
  mean_se(y, c.mean_Y, c.se_Y);
  for (long h : hits) c.floor_hits += h;
  return c;
}

// Adds a jump component with constant Psi = psi < 1. Z should factor as
// Y * E(-psi (mu - nu)), whose jump part is known in closed form.
struct PoissonExtension {
  double psi = 0.0;
  double intensity = 0.0;
  int paths = 0;
  long jumps = 0;
  PathErrorSummary factor_error;  // sup_t |Z - Y E| / (Y E)
};

inline PoissonExtension bessel_poisson_extension(double y0, double t_max, double dt, int n_paths,
                                                 std::uint64_t seed, const LevyComponentSpec& jumps,
                                                 double psi, int threads = 1) {
  if (!jumps.is_table()) throw Unsupported("the Poisson extension needs a jump table");
  if (!(psi < 1.0)) throw DomainError("Psi must stay below 1");
  DriverConfig cfg{1, {jumps}};
  cfg.validate();
  const double lam = jumps.total_intensity();
  const long n = std::lround(t_max / dt);
  std::vector<double> err(n_paths);
  std::vector<long> count(n_paths);
  parallel_for(n_paths, threads, [&](int p) {
    DriverSampler s(cfg, dt, path_seed(seed, static_cast<std::uint64_t>(p)));
    StepIncrement inc;
    BesselInverse b(y0);
    DensityZ z(y0);
    double log_e = 0.0, worst = 0.0;
    long k = 0;
    for (long i = 0; i < n; ++i) {
      s.next(inc);
      z.diffuse({2.0 * std::sqrt(b.y())}, inc.dW, dt);
      for (size_t j = 0; j < inc.jumps[0].size(); ++j) {
        z.jump(psi);
        ++k;
      }
      z.compensate(psi * lam * dt);
      b.step(inc.dW[0], dt);
      log_e = k * std::log1p(-psi) + psi * lam * (i + 1) * dt;
      double prod = b.y() * std::exp(log_e);
      worst = std::max(worst, std::abs(z.value() - prod) / prod);
    }
    err[p] = worst;
    count[p] = k;
  });
  PoissonExtension r;
  r.psi = psi;
  r.intensity = lam;
  r.paths = n_paths;
  for (long c : count) r.jumps += c;
  r.factor_error = summarize(err);
  return r;
}

}  // namespace hjmm
