#pragma once

// Finite, checkable consequences of the independence and uniqueness
// arguments: Vandermonde certificates, evaluation-point selection and
// Laplace transforms of discrete measures.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hjmm/curve_space.hpp"
#include "hjmm/span_rank.hpp"

namespace hjmm {

using HP = boost::multiprecision::cpp_bin_float_50;

namespace detail {

// determinant by Gaussian elimination with partial pivoting, 50 digits
inline HP hp_determinant(std::vector<std::vector<HP>> a) {
  const size_t n = a.size();
  HP det = 1;
  for (size_t c = 0; c < n; ++c) {
    size_t p = c;
    for (size_t r = c + 1; r < n; ++r)
      if (abs(a[r][c]) > abs(a[p][c])) p = r;
    if (a[p][c] == 0) return HP(0);
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (size_t r = c + 1; r < n; ++r) {
      HP f = a[r][c] / a[c][c];
      for (size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

// |det| / prod of column norms, in [0, 1]
inline HP hadamard_ratio(const std::vector<std::vector<HP>>& a, const HP& det) {
  HP r = abs(det);
  for (size_t c = 0; c < a.size(); ++c) {
    HP s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i][c] * a[i][c];
    if (s == 0) return HP(0);
    r /= sqrt(s);
  }
  return r;
}

}  // namespace detail

struct Certificate {
  double determinant = 0.0;
  double normalized = 0.0;  // |det| / prod column norms
  bool independent = false;
};

// Threshold on the normalized determinant when the matrix entries are
// themselves double-precision values (point selection).
constexpr double kCertificateThreshold = 1e-10;
// Same, when the entries are evaluated in 50-digit arithmetic. Rounding in
// the entries and the elimination stays far below this, so anything above is
// a genuine nonzero determinant.
constexpr double kHpCertificateThreshold = 1e-30;

// Determinant of [exp(t_j f(x_i))] (or [t_j^i] in power form) on the first
// m distinct values of f.
inline Certificate vandermonde_certificate(const std::vector<double>& f_values, const std::vector<double>& t,
                                           bool power_form = false) {
  const size_t m = t.size();
  if (m == 0) throw DomainError("vandermonde_certificate: empty multiplier list");
  std::vector<double> pts;
  for (double v : f_values)
    if (std::find(pts.begin(), pts.end(), v) == pts.end()) pts.push_back(v);
  if (!power_form && pts.size() < m) throw DomainError("vandermonde_certificate: not enough distinct evaluation points");
  std::vector<std::vector<HP>> a(m, std::vector<HP>(m));
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < m; ++j)
      a[i][j] = power_form ? pow(HP(t[j]), static_cast<int>(i)) : exp(HP(t[j]) * HP(pts[i]));
  HP det = detail::hp_determinant(a);
  Certificate c;
  c.determinant = static_cast<double>(det);
  c.normalized = static_cast<double>(detail::hadamard_ratio(a, det));
  c.independent = c.normalized >= kHpCertificateThreshold;
  return c;
}

struct PointSelection {
  bool success = false;
  std::vector<double> points;
  std::vector<int> indices;
  double determinant = 0.0;
  double normalized = 0.0;
};

// Greedy choice of m grid points with [f_j(theta_i)] as far from singular as
// possible: Gaussian elimination with complete pivoting on the grid x family
// matrix. The chosen rows do not depend on the order of the family.
inline PointSelection select_eval_points(const std::vector<std::function<double(double)>>& family,
                                         const std::vector<double>& grid, double threshold = kCertificateThreshold) {
  const int m = static_cast<int>(family.size());
  const int g = static_cast<int>(grid.size());
  PointSelection out;
  if (m == 0 || g < m) return out;
  Mat A(g, m);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = family[j](grid[i]);
  std::vector<bool> row_used(g, false), col_used(m, false);
  double first = 0.0;
  for (int s = 0; s < m; ++s) {
    int br = -1, bc = -1;
    double best = -1.0;
    for (int j = 0; j < m; ++j) {
      if (col_used[j]) continue;
      for (int i = 0; i < g; ++i)
        if (!row_used[i] && std::abs(A(i, j)) > best) {
          best = std::abs(A(i, j));
          br = i;
          bc = j;
        }
    }
    if (s == 0) first = best;
    if (!(best > threshold * first) || best == 0.0) {
      out.success = false;
      return out;
    }
    row_used[br] = col_used[bc] = true;
    out.indices.push_back(br);
    for (int j = 0; j < m; ++j) {
      if (col_used[j]) continue;
      double f = A(br, j) / A(br, bc);
      for (int i = 0; i < g; ++i)
        if (!row_used[i]) A(i, j) -= f * A(i, bc);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  std::vector<std::vector<HP>> a(m, std::vector<HP>(m));
  for (int i = 0; i < m; ++i) {
    out.points.push_back(grid[out.indices[i]]);
    for (int j = 0; j < m; ++j) a[i][j] = HP(family[j](out.points[i]));
  }
  HP det = detail::hp_determinant(a);
  out.determinant = static_cast<double>(det);
  out.normalized = static_cast<double>(detail::hadamard_ratio(a, det));
  out.success = out.normalized >= threshold;
  return out;
}

// ---- Laplace transforms of finite discrete measures

struct DiscreteMeasure {
  std::vector<std::pair<double, double>> atoms;  // (location, mass)

  void validate() const {
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (!std::isfinite(atoms[i].first) || !std::isfinite(atoms[i].second) || atoms[i].second < 0.0)
        throw DomainError("measure atoms need finite locations and nonnegative finite masses");
      for (size_t j = 0; j < i; ++j)
        if (atoms[j].first == atoms[i].first) throw DomainError("measure atoms must have distinct locations");
    }
  }
  bool has_negative_support() const {
    return std::any_of(atoms.begin(), atoms.end(), [](const auto& a) { return a.first < 0.0; });
  }
};

// admissible lambda range when the measure charges (-inf, 0)
struct LaplaceStrip {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

inline double laplace(const DiscreteMeasure& mu, double lambda, LaplaceStrip strip = {}) {
  mu.validate();
  if (mu.has_negative_support() && !(lambda >= strip.lo && lambda <= strip.hi))
    throw DomainError("laplace: lambda outside the declared strip");
  double s = 0.0;
  for (const auto& [x, m] : mu.atoms) s += m * std::exp(-lambda * x);
  return s;
}

enum class Verdict { equal, distinct, inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::equal: return "equal";
    case Verdict::distinct: return "distinct";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct HarnessResult {
  Verdict verdict = Verdict::inconclusive;
  double max_gap = 0.0;     // max |L_mu - L_nu| on the grid
  double condition = 1.0;   // of the exponential system on the union support
  double residual = 0.0;    // |E dm - d|
  Vec mass_difference;      // solved masses of mu - nu on the union support
  std::vector<double> support;
};

constexpr double kTransformGap = 1e-12;
constexpr double kMaxCondition = 1e12;

// Transforms that differ on the grid prove mu != nu. Transforms that agree
// are inverted on the union support: a well-conditioned system then forces
// the mass difference to vanish.
inline HarnessResult laplace_uniqueness_harness(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                const std::vector<double>& lambda_grid, LaplaceStrip strip = {}) {
  mu.validate();
  nu.validate();
  if (lambda_grid.size() < mu.atoms.size() + nu.atoms.size())
    throw DomainError("laplace harness: grid needs at least as many points as atoms");
  HarnessResult r;
  const size_t G = lambda_grid.size();
  Vec d(G);
  for (size_t g = 0; g < G; ++g) {
    d[g] = laplace(mu, lambda_grid[g], strip) - laplace(nu, lambda_grid[g], strip);
    r.max_gap = std::max(r.max_gap, std::abs(d[g]));
  }
  for (const auto& a : mu.atoms) r.support.push_back(a.first);
  for (const auto& a : nu.atoms)
    if (std::find(r.support.begin(), r.support.end(), a.first) == r.support.end()) r.support.push_back(a.first);
  std::sort(r.support.begin(), r.support.end());
  if (r.max_gap > kTransformGap) {
    r.verdict = Verdict::distinct;
    return r;
  }
  if (r.support.empty()) {
    r.verdict = Verdict::equal;
    return r;
  }
  const size_t K = r.support.size();
  Mat E(G, K);
  for (size_t g = 0; g < G; ++g)
    for (size_t k = 0; k < K; ++k) E(g, k) = std::exp(-lambda_grid[g] * r.support[k]);
  Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  r.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  r.mass_difference = svd.solve(d);
  r.residual = (E * r.mass_difference - d).norm();
  if (r.condition > kMaxCondition) {
    r.verdict = Verdict::inconclusive;
    return r;
  }
  r.verdict = r.mass_difference.lpNorm<Eigen::Infinity>() <= 1e-8 ? Verdict::equal : Verdict::distinct;
  return r;
}

// ---- randomized self-tests

struct OracleSuite {
  int family_cases = 0, family_disagreements = 0;
  int distinct_pairs = 0, distinct_detected = 0;
  int equal_pairs = 0, false_separations = 0, equal_inconclusive = 0;
  double max_residual = 0.0;  // over the equal pairs, where the solve runs
};

// Exponential families {e^{lambda_j x}} of size 1..8, half of them with a
// repeated rate, judged by the determinant certificate and by the sampled
// rank. Then measure pairs that differ and pairs that are equal up to the
// order of their atoms.
inline OracleSuite run_oracle_suite(std::uint64_t seed, int cases = 100) {
  OracleSuite s;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_int_distribution<int> slot(0, 16);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> xs;
  for (int i = 0; i < 201; ++i) xs.push_back(4.0 * i / 200.0);

  for (int c = 0; c < cases; ++c) {
    int m = size(rng);
    std::vector<double> rates;
    while (static_cast<int>(rates.size()) < m) {
      double r = -2.0 + 0.25 * slot(rng);
      if (std::find(rates.begin(), rates.end(), r) == rates.end()) rates.push_back(r);
    }
    if (m > 1 && coin(rng)) rates.back() = rates.front();
    std::vector<double> pts;
    for (int i = 0; i < m; ++i) pts.push_back(4.0 * i / std::max(1, m - 1));
    if (m == 1) pts = {0.5};
    Certificate cert = vandermonde_certificate(pts, rates);
    SpanSampleSet set{Ambient::plain, {}, 1e-8};
    for (double r : rates) {
      Vec f(xs.size());
      for (size_t i = 0; i < xs.size(); ++i) f[i] = std::exp(r * xs[i]);
      set.add(f / f.norm());
    }
    bool rank_says = numerical_rank(set).rank == m;
    ++s.family_cases;
    if (rank_says != cert.independent) ++s.family_disagreements;
  }

  std::vector<double> grid;
  for (int i = 0; i < 16; ++i) grid.push_back(0.25 * i);
  std::uniform_int_distribution<int> atoms(1, 4);
  std::uniform_int_distribution<int> loc(0, 15);
  std::uniform_real_distribution<double> mass(0.1, 1.0);
  std::uniform_int_distribution<int> kind(0, 2);
  auto random_measure = [&]() {
    DiscreteMeasure mu;
    int k = atoms(rng);
    while (static_cast<int>(mu.atoms.size()) < k) {
      double x = 0.2 * loc(rng);
      bool fresh = std::none_of(mu.atoms.begin(), mu.atoms.end(), [&](const auto& a) { return a.first == x; });
      if (fresh) mu.atoms.push_back({x, mass(rng)});
    }
    return mu;
  };
  for (int c = 0; c < cases; ++c) {
    DiscreteMeasure mu = random_measure();
    DiscreteMeasure nu = mu;
    switch (kind(rng)) {
      case 0: nu.atoms[0].second += 0.05 + 0.5 * mass(rng); break;
      case 1: {
        double x = nu.atoms[0].first + 0.1;
        bool fresh = std::none_of(nu.atoms.begin(), nu.atoms.end(), [&](const auto& a) { return a.first == x; });
        if (fresh) nu.atoms[0].first = x;
        else nu.atoms[0].second *= 2.0;
        break;
      }
      default: {
        double x = 3.1;  // off the 0.2 lattice
        nu.atoms.push_back({x, mass(rng)});
      }
    }
    ++s.distinct_pairs;
    if (laplace_uniqueness_harness(mu, nu, grid).verdict == Verdict::distinct) ++s.distinct_detected;

    DiscreteMeasure same = mu;
    std::reverse(same.atoms.begin(), same.atoms.end());
    auto r = laplace_uniqueness_harness(mu, same, grid);
    ++s.equal_pairs;
    if (r.verdict == Verdict::distinct) ++s.false_separations;
    if (r.verdict == Verdict::inconclusive) ++s.equal_inconclusive;
    s.max_residual = std::max(s.max_residual, r.residual);
  }
  return s;
}

}  // namespace hjmm
