#pragma once

// Line-oriented scenario files:
//   [section]
//   key = value      # comment
// Unknown keys, duplicates and malformed values are errors.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hjmm/drift.hpp"

namespace hjmm {

namespace cfg {

inline std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& s, const std::string& key, int line = 0) {
  double v = 0.0;
  auto t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError("expected a number, got '" + s + "'", line, key);
  return v;
}

inline long to_long(const std::string& s, const std::string& key, int line = 0) {
  long v = 0;
  auto t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError("expected an integer, got '" + s + "'", line, key);
  return v;
}

inline std::vector<double> to_list(const std::string& s, const std::string& key, int line = 0) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& x : split(s, ',')) out.push_back(to_double(x, key, line));
  return out;
}

}  // namespace cfg

struct CurveSpec {
  enum class Kind { flat, nelson_siegel };
  Kind kind = Kind::flat;
  double b0 = 0.03, b1 = 0.0, lambda = 1.0;

  ForwardCurve on(const GridPtr& g) const {
    if (kind == Kind::flat) return ForwardCurve::constant(g, b0);
    return ForwardCurve::from(g, [this](double x) { return b0 + b1 * std::exp(-lambda * x); });
  }
};

struct ScenarioConfig {
  // raw entries, "section.key" -> (value, line)
  std::map<std::string, std::pair<std::string, int>> raw;

  double xi_max = 30.0;
  int n_points = 601;
  double weight_alpha = 0.1;
  double t_max = 1.0;
  double dt = 0.01;
  int wiener_count = 0;
  int jump_count = 0;
  std::vector<QuasiExponentialSpec> sigma, gamma;
  std::vector<LevyComponentSpec> components;
  MprFamily mpr;
  StateProcessSpec::Kind state = StateProcessSpec::Kind::frozen;
  double y0 = 0.0;
  CurveSpec h0;
  int paths = 100;
  std::uint64_t seed = 1;
  std::vector<double> maturities;
  int every = 1;
  // rank sweeps
  int h_multiples = 8;
  double segment = 1.0;
  int cumulant_order = 8;
  std::vector<double> z_grid{-4.5, 4.5, 201};
  // certification
  int v_count = 4;
  double v_amplitude = 0.01;
  double tol_certified = 1e-6;
  double tol_refuted = 1e-3;
  double rank_tol = 1e-8;

  std::string get(const std::string& k, const std::string& def = {}) const {
    auto it = raw.find(k);
    return it == raw.end() ? def : it->second.first;
  }
  int line_of(const std::string& k) const {
    auto it = raw.find(k);
    return it == raw.end() ? 0 : it->second.second;
  }

  // FNV-1a over the sorted "key=value" lines
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [k, v] : raw) {
      for (char c : k + "=" + v.first + "\n") {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
      }
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
  }

  GridPtr grid() const { return make_grid(xi_max, n_points, weight_alpha); }

  ModelSpec model() const {
    ModelSpec m;
    m.grid = grid();
    m.sigma = sigma;
    m.gamma = gamma;
    m.drivers.d = wiener_count;
    m.drivers.components = components;
    m.mpr = mpr;
    m.validate();
    return m;
  }

  StateProcessSpec state_spec() const { return {state, y0, dt}; }
};

namespace cfg {

inline const std::set<std::string>& fixed_keys() {
  static const std::set<std::string> k = {
      "grid.xi_max",      "grid.n_points",        "grid.weight_alpha", "time.t_max",       "time.dt",
      "wiener.count",     "jumps.count",          "mpr.theta",         "mpr.psi",          "mpr.y_samples",
      "mpr.y0",           "mpr.state",            "mpr.y_star",        "curve.h0",         "mc.paths",
      "mc.seed",          "report.maturities",    "report.every",      "rank.h_multiples", "rank.segment",
      "rank.cumulant_order", "rank.z_grid",       "rank.tol",          "certify.v_count",  "certify.v_amplitude",
      "certify.tol_certified", "certify.tol_refuted"};
  return k;
}

inline bool indexed_key(const std::string& key, const std::string& prefix, int* idx) {
  if (key.rfind(prefix, 0) != 0) return false;
  std::string rest = key.substr(prefix.size());
  if (rest.empty() || !std::all_of(rest.begin(), rest.end(), ::isdigit)) return false;
  *idx = std::stoi(rest);
  return true;
}

inline bool known_key(const std::string& key) {
  int i;
  return fixed_keys().count(key) || indexed_key(key, "wiener.sigma.", &i) || indexed_key(key, "jumps.comp.", &i) ||
         indexed_key(key, "jumps.gamma.", &i);
}

inline QuasiExponentialSpec parse_vol(const std::string& v, const std::string& key, int line) {
  auto p = split(v, ':');
  if (p.size() != 2) throw ConfigError("volatility must be kind:params", line, key);
  auto a = to_list(p[1], key, line);
  if (p[0] == "vasicek" && a.size() == 2) return QuasiExponentialSpec::vasicek(a[0], a[1]);
  if (p[0] == "constant" && a.size() == 1) return QuasiExponentialSpec::constant(a[0]);
  if (p[0] == "shortrate" && a.size() == 1) return QuasiExponentialSpec::short_rate_scaled(a[0]);
  throw ConfigError("unknown volatility '" + v + "'", line, key);
}

inline LevyComponentSpec parse_component(const std::string& v, const std::string& key, int line) {
  auto p = split(v, ':');
  bool comp = false;
  if (p.size() == 3) {
    if (p[2] == "compensated")
      comp = true;
    else if (p[2] != "uncompensated")
      throw ConfigError("third field must be compensated or uncompensated", line, key);
  } else if (p.size() != 2) {
    throw ConfigError("jump component must be kind:params[:compensated]", line, key);
  }
  try {
    if (p[0] == "table") {
      std::string body = p[1];
      if (body.size() < 2 || body.front() != '{' || body.back() != '}')
        throw ConfigError("table needs {x:rho,...}", line, key);
      std::vector<JumpAtom> atoms;
      for (const auto& e : split(body.substr(1, body.size() - 2), ',')) {
        auto xr = split(e, ':');
        if (xr.size() != 2) throw ConfigError("table entry must be x:rho", line, key);
        atoms.push_back({to_double(xr[0], key, line), to_double(xr[1], key, line)});
      }
      return LevyComponentSpec::jump_table(atoms, comp);
    }
    if (p[0] == "bgamma") {
      auto a = to_list(p[1], key, line);
      if (a.size() != 4) throw ConfigError("bgamma needs alpha+,lambda+,alpha-,lambda-", line, key);
      return LevyComponentSpec::bilateral_gamma({a[0], a[1], a[2], a[3]}, comp);
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), line, key);
  }
  throw ConfigError("unknown jump component '" + v + "'", line, key);
}

inline VarthetaSpec parse_vartheta(const std::string& kind, const std::string& arg, const std::string& key, int line) {
  VarthetaSpec s;
  s.a = to_double(arg, key, line);
  if (kind == "linear") s.kind = VarthetaSpec::Kind::linear;
  else if (kind == "const") s.kind = VarthetaSpec::Kind::constant;
  else if (kind == "sqrt") s.kind = VarthetaSpec::Kind::sqrt_;
  else throw ConfigError("unknown vartheta '" + kind + "'", line, key);
  return s;
}

inline void parse_psi(const std::string& v, MprFamily& m, const std::string& key, int line) {
  auto p = split(v, ':');
  if (p[0] == "zero" && p.size() == 1) {
    m.psi_kind = MprFamily::PsiKind::zero;
  } else if (p[0] == "const_y" && p.size() == 1) {
    m.psi_kind = MprFamily::PsiKind::constant_in_x;
  } else if (p[0] == "exp" && p.size() == 3) {
    m.psi_kind = MprFamily::PsiKind::exp_in_x;
    m.vartheta = parse_vartheta(p[1], p[2], key, line);
  } else if (p[0] == "product" && (p.size() == 4 || p.size() == 5)) {
    m.psi_kind = MprFamily::PsiKind::product_form;
    m.vartheta = parse_vartheta(p[1], p[2], key, line);
    if (p[3] == "identity" && p.size() == 4) m.xi_map = {XiMapSpec::Kind::identity, 1.0};
    else if (p[3] == "cube" && p.size() == 4) m.xi_map = {XiMapSpec::Kind::cube, 1.0};
    else if (p[3] == "linear" && p.size() == 5) m.xi_map = {XiMapSpec::Kind::linear, to_double(p[4], key, line)};
    else throw ConfigError("unknown xi map in '" + v + "'", line, key);
  } else {
    throw ConfigError("unknown psi '" + v + "'", line, key);
  }
}

inline void parse_theta(const std::string& v, MprFamily& m, const std::string& key, int line) {
  auto p = split(v, ':');
  if (p[0] == "zero" && p.size() == 1) m.theta_kind = MprFamily::ThetaKind::zero;
  else if (p[0] == "bessel" && p.size() == 1) m.theta_kind = MprFamily::ThetaKind::bessel_sqrt;
  else if (p[0] == "const" && p.size() == 2) {
    m.theta_kind = MprFamily::ThetaKind::constant_vector;
    m.theta_const = to_list(p[1], key, line);
  } else throw ConfigError("unknown theta '" + v + "'", line, key);
}

inline CurveSpec parse_curve(const std::string& v, const std::string& key, int line) {
  auto p = split(v, ':');
  CurveSpec c;
  if (p.size() == 2 && p[0] == "flat") {
    c.kind = CurveSpec::Kind::flat;
    c.b0 = to_double(p[1], key, line);
    return c;
  }
  if (p.size() == 2 && p[0] == "ns") {
    auto a = to_list(p[1], key, line);
    if (a.size() != 3) throw ConfigError("ns needs level,slope,decay", line, key);
    return {CurveSpec::Kind::nelson_siegel, a[0], a[1], a[2]};
  }
  throw ConfigError("unknown curve '" + v + "'", line, key);
}

}  // namespace cfg

// key=value overrides use "section.key=value"
inline ScenarioConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
  using namespace cfg;
  ScenarioConfig c;
  std::string line, section;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", ln);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", ln);
    if (section.empty()) throw ConfigError("key outside of any section", ln);
    std::string key = section + "." + trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
    if (!known_key(key)) throw ConfigError("unknown key", ln, key);
    if (c.raw.count(key)) throw ConfigError("duplicate key", ln, key);
    c.raw[key] = {val, ln};
  }
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be section.key=value", 0, o);
    std::string key = trim(o.substr(0, eq));
    if (!known_key(key)) throw ConfigError("unknown key in override", 0, key);
    c.raw[key] = {trim(o.substr(eq + 1)), 0};
  }

  auto num = [&](const std::string& k, double& dst) {
    if (c.raw.count(k)) dst = to_double(c.get(k), k, c.line_of(k));
  };
  auto integer = [&](const std::string& k, auto& dst) {
    if (c.raw.count(k)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(to_long(c.get(k), k, c.line_of(k)));
  };
  auto list = [&](const std::string& k, std::vector<double>& dst) {
    if (c.raw.count(k)) dst = to_list(c.get(k), k, c.line_of(k));
  };

  num("grid.xi_max", c.xi_max);
  integer("grid.n_points", c.n_points);
  num("grid.weight_alpha", c.weight_alpha);
  num("time.t_max", c.t_max);
  num("time.dt", c.dt);
  integer("wiener.count", c.wiener_count);
  integer("jumps.count", c.jump_count);
  integer("mc.paths", c.paths);
  if (c.raw.count("mc.seed")) c.seed = static_cast<std::uint64_t>(to_long(c.get("mc.seed"), "mc.seed", c.line_of("mc.seed")));
  list("report.maturities", c.maturities);
  integer("report.every", c.every);
  integer("rank.h_multiples", c.h_multiples);
  num("rank.segment", c.segment);
  integer("rank.cumulant_order", c.cumulant_order);
  list("rank.z_grid", c.z_grid);
  num("rank.tol", c.rank_tol);
  integer("certify.v_count", c.v_count);
  num("certify.v_amplitude", c.v_amplitude);
  num("certify.tol_certified", c.tol_certified);
  num("certify.tol_refuted", c.tol_refuted);
  num("mpr.y0", c.y0);
  num("mpr.y_star", c.mpr.y_star);
  list("mpr.y_samples", c.mpr.y_samples);
  if (c.raw.count("curve.h0")) c.h0 = parse_curve(c.get("curve.h0"), "curve.h0", c.line_of("curve.h0"));
  if (c.raw.count("mpr.theta")) parse_theta(c.get("mpr.theta"), c.mpr, "mpr.theta", c.line_of("mpr.theta"));
  if (c.raw.count("mpr.psi")) parse_psi(c.get("mpr.psi"), c.mpr, "mpr.psi", c.line_of("mpr.psi"));
  if (c.raw.count("mpr.state")) {
    auto s = c.get("mpr.state");
    if (s == "frozen") c.state = StateProcessSpec::Kind::frozen;
    else if (s == "bessel") c.state = StateProcessSpec::Kind::bessel_inverse;
    else throw ConfigError("state must be frozen or bessel", c.line_of("mpr.state"), "mpr.state");
  }

  if (c.wiener_count < 0 || c.jump_count < 0) throw ConfigError("driver counts must be nonnegative");
  for (const auto& [k, v] : c.raw) {
    int i;
    if ((indexed_key(k, "wiener.sigma.", &i) && (i < 1 || i > c.wiener_count)) ||
        ((indexed_key(k, "jumps.comp.", &i) || indexed_key(k, "jumps.gamma.", &i)) && (i < 1 || i > c.jump_count)))
      throw ConfigError("index outside the declared count", v.second, k);
  }
  for (int k = 1; k <= c.wiener_count; ++k) {
    std::string key = "wiener.sigma." + std::to_string(k);
    if (!c.raw.count(key)) throw ConfigError("missing volatility", 0, key);
    c.sigma.push_back(parse_vol(c.get(key), key, c.line_of(key)));
  }
  for (int k = 1; k <= c.jump_count; ++k) {
    std::string key = "jumps.comp." + std::to_string(k);
    std::string gkey = "jumps.gamma." + std::to_string(k);
    if (!c.raw.count(key)) throw ConfigError("missing jump component", 0, key);
    if (!c.raw.count(gkey)) throw ConfigError("missing jump volatility", 0, gkey);
    c.components.push_back(parse_component(c.get(key), key, c.line_of(key)));
    c.gamma.push_back(parse_vol(c.get(gkey), gkey, c.line_of(gkey)));
  }

  if (!(c.dt > 0.0) || !(c.t_max > 0.0)) throw ConfigError("time.dt and time.t_max must be positive");
  if (c.paths < 1) throw ConfigError("mc.paths must be positive", c.line_of("mc.paths"), "mc.paths");
  if (c.every < 1) throw ConfigError("report.every must be positive", c.line_of("report.every"), "report.every");
  if (c.z_grid.size() != 3 || c.z_grid[2] < 2) throw ConfigError("rank.z_grid is lo,hi,count", c.line_of("rank.z_grid"), "rank.z_grid");
  try {
    make_grid(c.xi_max, c.n_points, c.weight_alpha);
    // a file without drivers is still a valid config for the model-free
    // commands; model() rejects it
    DriverConfig dc{c.wiener_count, c.components};
    if (dc.d + dc.n() > 0) dc.validate();
    c.mpr.validate(dc);
    for (const auto& s : c.sigma) s.validate();
    for (const auto& g : c.gamma) g.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.state == StateProcessSpec::Kind::bessel_inverse && !(c.y0 > 0.0))
    throw ConfigError("bessel state needs mpr.y0 > 0", c.line_of("mpr.y0"), "mpr.y0");
  return c;
}

inline ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return parse_config(in, overrides);
}

}  // namespace hjmm
