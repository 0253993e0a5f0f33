#pragma once

// Finite sums of p(xi) exp(lambda xi). Closed under d/dxi, products and
// integration from 0, which is all the realization module needs.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "hjmm/curve_space.hpp"

namespace hjmm {

struct QETerm {
  std::vector<double> poly;  // poly[j] multiplies xi^j
  double lambda = 0.0;
};

class QuasiExponential {
 public:
  QuasiExponential() = default;
  explicit QuasiExponential(std::vector<QETerm> terms) : terms_(std::move(terms)) { normalize(); }

  static QuasiExponential constant(double c) { return QuasiExponential({{{c}, 0.0}}); }
  static QuasiExponential exponential(double c, double lambda) {
    return QuasiExponential({{{c}, lambda}});
  }
  static QuasiExponential monomial(int j, double lambda, double c = 1.0) {
    std::vector<double> p(j + 1, 0.0);
    p[j] = c;
    return QuasiExponential({{p, lambda}});
  }

  const std::vector<QETerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double operator()(double xi) const {
    double s = 0.0;
    for (const auto& t : terms_) s += horner(t.poly, xi) * std::exp(t.lambda * xi);
    return s;
  }

  ForwardCurve on(const GridPtr& g) const {
    return ForwardCurve::from(g, [this](double xi) { return (*this)(xi); });
  }

  QuasiExponential derivative() const {
    std::vector<QETerm> out;
    for (const auto& t : terms_) {
      QETerm d{std::vector<double>(t.poly.size(), 0.0), t.lambda};
      for (size_t j = 0; j < t.poly.size(); ++j) {
        d.poly[j] += t.lambda * t.poly[j];
        if (j > 0) d.poly[j - 1] += static_cast<double>(j) * t.poly[j];
      }
      out.push_back(std::move(d));
    }
    return QuasiExponential(std::move(out));
  }

  // xi -> int_0^xi
  QuasiExponential integral() const {
    std::vector<QETerm> out;
    double c0 = 0.0;
    for (const auto& t : terms_) {
      if (t.lambda == 0.0) {
        QETerm q{std::vector<double>(t.poly.size() + 1, 0.0), 0.0};
        for (size_t j = 0; j < t.poly.size(); ++j) q.poly[j + 1] = t.poly[j] / static_cast<double>(j + 1);
        out.push_back(std::move(q));
        continue;
      }
      // q' + lambda q = p  =>  q = sum_j (-1)^j p^(j) / lambda^(j+1)
      std::vector<double> q(t.poly.size(), 0.0), dp = t.poly;
      double sgn = 1.0, lp = t.lambda;
      for (size_t j = 0; j < t.poly.size(); ++j) {
        for (size_t i = 0; i < dp.size(); ++i) q[i] += sgn * dp[i] / lp;
        dp = poly_derivative(dp);
        sgn = -sgn;
        lp *= t.lambda;
      }
      c0 -= q[0];
      out.push_back({q, t.lambda});
    }
    out.push_back({{c0}, 0.0});
    return QuasiExponential(std::move(out));
  }

  QuasiExponential operator+(const QuasiExponential& o) const {
    auto t = terms_;
    t.insert(t.end(), o.terms_.begin(), o.terms_.end());
    return QuasiExponential(std::move(t));
  }
  QuasiExponential operator*(double s) const {
    auto t = terms_;
    for (auto& x : t)
      for (auto& c : x.poly) c *= s;
    return QuasiExponential(std::move(t));
  }
  QuasiExponential operator-() const { return *this * -1.0; }
  QuasiExponential operator-(const QuasiExponential& o) const { return *this + (-o); }

  QuasiExponential operator*(const QuasiExponential& o) const {
    std::vector<QETerm> out;
    for (const auto& a : terms_)
      for (const auto& b : o.terms_) {
        QETerm p{std::vector<double>(a.poly.size() + b.poly.size() - 1, 0.0), a.lambda + b.lambda};
        for (size_t i = 0; i < a.poly.size(); ++i)
          for (size_t j = 0; j < b.poly.size(); ++j) p.poly[i + j] += a.poly[i] * b.poly[j];
        out.push_back(std::move(p));
      }
    return QuasiExponential(std::move(out));
  }

  // upper bound on the dimension of the span of all derivatives
  int closure_bound() const {
    int n = 0;
    for (const auto& t : terms_) n += static_cast<int>(t.poly.size());
    return n;
  }

  double max_exponent() const {
    double m = -INFINITY;
    for (const auto& t : terms_) m = std::max(m, t.lambda);
    return m;
  }

  std::string str() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& t : terms_) {
      os << "(";
      for (size_t j = 0; j < t.poly.size(); ++j) os << (j ? "," : "") << t.poly[j];
      os << ")e^" << t.lambda << " ";
    }
    return os.str();
  }

 private:
  std::vector<QETerm> terms_;

  static double horner(const std::vector<double>& p, double x) {
    double s = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
    return s;
  }
  static std::vector<double> poly_derivative(const std::vector<double>& p) {
    if (p.size() <= 1) return {0.0};
    std::vector<double> d(p.size() - 1);
    for (size_t j = 1; j < p.size(); ++j) d[j - 1] = static_cast<double>(j) * p[j];
    return d;
  }
  static bool same_rate(double a, double b) {
    return std::abs(a - b) <= 1e-13 * std::max({1.0, std::abs(a), std::abs(b)});
  }

  void normalize() {
    std::vector<QETerm> merged;
    for (auto& t : terms_) {
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const QETerm& m) { return same_rate(m.lambda, t.lambda); });
      if (it == merged.end()) {
        merged.push_back(t);
        continue;
      }
      if (it->poly.size() < t.poly.size()) it->poly.resize(t.poly.size(), 0.0);
      for (size_t j = 0; j < t.poly.size(); ++j) it->poly[j] += t.poly[j];
    }
    std::vector<QETerm> out;
    for (auto& m : merged) {
      while (!m.poly.empty() && m.poly.back() == 0.0) m.poly.pop_back();
      if (!m.poly.empty()) out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), [](const QETerm& a, const QETerm& b) { return a.lambda > b.lambda; });
    terms_ = std::move(out);
  }
};

// A volatility map h -> c(h) * shape, where c(h) is 1 or scale * h(0).
struct QuasiExponentialSpec {
  QuasiExponential shape;
  bool state_scaled = false;
  double scale = 1.0;

  static QuasiExponentialSpec vasicek(double sigma0, double lambda) {
    if (lambda < 0.0) throw DomainError("vasicek: decay rate must be nonnegative");
    return {QuasiExponential::exponential(sigma0, -lambda), false, 1.0};
  }
  static QuasiExponentialSpec constant(double sigma0) {
    return {QuasiExponential::constant(sigma0), false, 1.0};
  }
  static QuasiExponentialSpec short_rate_scaled(double c) {
    return {QuasiExponential::constant(1.0), true, c};
  }

  void validate() const {
    if (!shape.is_zero() && shape.max_exponent() > 0.0)
      throw DomainError("quasi-exponential volatility with a growing exponent");
  }

  bool is_zero() const { return shape.is_zero() || (state_scaled && scale == 0.0); }
  bool constant_in_xi() const {
    return shape.is_zero() || (shape.terms().size() == 1 && shape.terms()[0].lambda == 0.0 &&
                               shape.terms()[0].poly.size() == 1);
  }
  double factor(const ForwardCurve& h) const { return state_scaled ? scale * h.at0() : 1.0; }

  ForwardCurve eval(const ForwardCurve& h) const {
    ForwardCurve c = shape.on(h.grid);
    if (state_scaled) c.values *= factor(h);
    return c;
  }
};

}  // namespace hjmm
