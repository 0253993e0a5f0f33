#pragma once

// Command dispatch for hjmm_lab. Each command writes one CSV report (two for
// invariance) into the output directory and returns the process exit code:
// 0 success, 2 refuted certification, 1 error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hjmm/analysis_oracles.hpp"
#include "hjmm/bessel_example.hpp"
#include "hjmm/config.hpp"
#include "hjmm/realization.hpp"
#include "hjmm/report.hpp"

namespace hjmm::cli {

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed;
  bool timestamp = true;
  std::string scenario_id;  // defaults to the config hash
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"simulate", "invariance", "rank", "bessel", "martingale", "oracles"};
  return c;
}

namespace detail {

struct Context {
  const ScenarioConfig& cfg;
  RunOptions opt;
  std::uint64_t seed;

  std::string path(const std::string& file) const { return (std::filesystem::path(opt.out_dir) / file).string(); }

  ReportMeta meta(const std::string& command, std::vector<std::pair<std::string, std::string>> extra = {}) const {
    return {command, cfg.hash(), seed, std::move(extra), opt.timestamp};
  }

  SimOptions sim() const {
    SimOptions o;
    o.t_max = cfg.t_max;
    o.dt = cfg.dt;
    o.n_paths = cfg.paths;
    o.seed = seed;
    o.maturities = cfg.maturities;
    o.record_every = cfg.every;
    o.threads = opt.threads;
    o.state = cfg.state_spec();
    return o;
  }
};

inline std::vector<double> as_list(const Vec& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<ForwardCurve> h_multiples(const ScenarioConfig& c, const GridPtr& g) {
  std::vector<ForwardCurve> hs;
  ForwardCurve f = c.h0.on(g);
  for (int i = 1; i <= c.h_multiples; ++i) hs.push_back((c.segment * i / c.h_multiples) * f);
  return hs;
}

inline int simulate(const Context& x) {
  ModelSpec m = x.cfg.model();
  auto paths = hjmm::simulate(m, x.cfg.h0.on(m.grid), x.sim());
  CsvReport r(x.path("simulate.csv"), x.meta("simulate", {{"dt", fmt(x.cfg.dt)}, {"paths", fmt(x.cfg.paths)}}));
  std::vector<std::string> head = {"time", "path_id", "R", "B", "GOP", "Z"};
  for (double T : x.cfg.maturities) head.push_back("P(" + fmt(T) + ")");
  for (double T : x.cfg.maturities) head.push_back("benchmarked(" + fmt(T) + ")");
  r.row(head);
  long floor = 0;
  for (size_t p = 0; p < paths.size(); ++p) {
    const auto& s = paths[p];
    floor += s.floor_hits;
    for (size_t j = 0; j < s.times.size(); ++j) {
      std::vector<std::string> row = {fmt(s.times[j]), fmt(static_cast<long>(p)), fmt(s.R[j]), fmt(s.B[j]),
                                      fmt(s.gop[j]),   fmt(s.Z[j])};
      for (double v : s.bonds[j]) row.push_back(fmt(v));
      for (double v : s.benchmarked[j]) row.push_back(fmt(v));
      r.row(row);
    }
  }
  if (floor > 0) r.comment("state floor hits: " + fmt(floor));
  return 0;
}

inline int martingale(const Context& x) {
  ModelSpec m = x.cfg.model();
  auto paths = hjmm::simulate(m, x.cfg.h0.on(m.grid), x.sim());
  CsvReport r(x.path("martingale.csv"), x.meta("martingale", {{"band", "3 se"}, {"paths", fmt(x.cfg.paths)}}));
  r.row({"quantity", "maturity", "t", "mean_increment", "se", "z", "within_band"});
  auto emit = [&](const char* name, Quantity q, int mi, double T) {
    for (double t : paths[0].times) {
      if (t == 0.0) continue;
      if (q == Quantity::discounted_bond || q == Quantity::benchmarked_bond) {
        if (t > T + 1e-12) continue;
      }
      auto s = martingale_statistic(paths, q, t, mi);
      r.row({name, std::isnan(T) ? "" : fmt(T), fmt(t), fmt(s.mean), fmt(s.se), fmt(s.z),
             std::abs(s.z) <= 3.0 ? "yes" : "no"});
    }
  };
  for (size_t i = 0; i < x.cfg.maturities.size(); ++i) {
    emit("discounted_bond", Quantity::discounted_bond, static_cast<int>(i), x.cfg.maturities[i]);
    emit("benchmarked_bond", Quantity::benchmarked_bond, static_cast<int>(i), x.cfg.maturities[i]);
  }
  const double none = std::numeric_limits<double>::quiet_NaN();
  emit("density", Quantity::density, 0, none);
  emit("benchmarked_bank", Quantity::benchmarked_bank, 0, none);
  return 0;
}

inline void residual_rows(CsvReport& r, const InvarianceReport& rep, int d, int n) {
  std::vector<std::string> head = {"t", "y_index", "residual_drift"};
  for (int k = 1; k <= d; ++k) head.push_back("residual_vol_" + std::to_string(k));
  for (int k = 1; k <= n; ++k) head.push_back("residual_jump_" + std::to_string(k));
  r.row(head);
  for (const auto& row : rep.rows) {
    std::vector<std::string> cells = {fmt(row.t), fmt(row.y_index), fmt(row.drift)};
    for (double v : row.vol) cells.push_back(fmt(v));
    for (double v : row.jump) cells.push_back(fmt(v));
    r.row(cells);
  }
}

inline CertifyOptions certify_options(const ScenarioConfig& c) {
  CertifyOptions o;
  o.t_max = c.t_max;
  o.dt = c.dt;
  o.t_samples = {0.0, 0.5 * c.t_max, c.t_max};
  o.v_count = c.v_count;
  o.v_amplitude = c.v_amplitude;
  o.tol_certified = c.tol_certified;
  o.tol_refuted = c.tol_refuted;
  o.rank_tol = c.rank_tol;
  return o;
}

inline int invariance(const Context& x) {
  ModelSpec m = x.cfg.model();
  CertifyOptions o = certify_options(x.cfg);
  Certification c = certify(m, x.cfg.h0.on(m.grid), o);
  std::vector<std::pair<std::string, std::string>> tol = {{"tol_certified", fmt(o.tol_certified)},
                                                          {"tol_refuted", fmt(o.tol_refuted)},
                                                          {"retained", fmt(o.retained)},
                                                          {"rank_tol", fmt(o.rank_tol)},
                                                          {"dim_V", fmt(c.V.dim())}};
  std::string verdict = std::string("verdict: ") + cert_name(c.verdict) + " tol_certified=" + fmt(o.tol_certified) +
                        " tol_refuted=" + fmt(o.tol_refuted) + " base_max=" + fmt(c.base.max()) +
                        " refined_max=" + fmt(c.refined.max()) + " ratio=" + fmt(c.ratio);
  {
    CsvReport r(x.path("invariance.csv"), x.meta("invariance", tol));
    residual_rows(r, c.base, m.d(), m.n());
    r.comment(verdict);
  }
  {
    auto meta = x.meta("invariance", tol);
    meta.extra.push_back({"grid", "refined"});
    CsvReport r(x.path("invariance_refined.csv"), meta);
    residual_rows(r, c.refined, m.d(), m.n());
    r.comment(verdict);
  }
  std::cout << cert_name(c.verdict) << " base=" << fmt(c.base.max()) << " ratio=" << fmt(c.ratio) << "\n";
  return c.verdict == CertVerdict::refuted ? 2 : 0;
}

inline int rank(const Context& x) {
  ModelSpec m = x.cfg.model();
  const double tol = x.cfg.rank_tol;
  const std::string id = x.opt.scenario_id.empty() ? x.cfg.hash() : x.opt.scenario_id;
  CsvReport r(x.path("rank.csv"), x.meta("rank", {{"tol", fmt(tol)}}));
  r.comment(kRankCaveat);
  r.row({"scenario", "span", "samples", "tol", "rank", "singular_values"});
  auto emit = [&](const std::string& span, int count, const RankResult& rr) {
    r.row({id, span, fmt(count), fmt(tol), fmt(rr.rank), join(as_list(rr.singular_values))});
  };
  const auto& zg = x.cfg.z_grid;
  std::vector<double> z;
  for (int i = 0; i < static_cast<int>(zg[2]); ++i) z.push_back(zg[0] + (zg[1] - zg[0]) * i / (zg[2] - 1));
  for (int k = 0; k < m.n(); ++k) {
    const auto& spec = m.drivers.components[k];
    std::string ks = std::to_string(k + 1);
    std::vector<double> zk;
    for (double v : z)
      if (v > spec.z_lo() && v < spec.z_hi()) zk.push_back(v);
    auto prof = cumulant_span_rank(spec, x.cfg.cumulant_order, zk, tol);
    for (size_t M = 0; M < prof.full.size(); ++M)
      r.row({id, "kappa_0_to_" + std::to_string(M) + "." + ks, fmt(static_cast<int>(M + 1)), fmt(tol),
             fmt(prof.full[M]), M + 1 == prof.full.size() ? join(as_list(prof.sv_full)) : ""});
    for (size_t M = 0; M < prof.derivative.size(); ++M)
      r.row({id, "kappa_1_to_" + std::to_string(M + 1) + "." + ks, fmt(static_cast<int>(M + 1)), fmt(tol),
             fmt(prof.derivative[M]),
             M + 1 == prof.derivative.size()
                 ? join(as_list(prof.sv_derivative))
                 : ""});
    emit("U_psi." + ks, static_cast<int>(m.mpr.y_samples.size()), rank_U_psi(m, k, m.mpr.y_samples, tol));
    if (spec.is_table()) {
      auto hs = h_multiples(x.cfg, m.grid);
      emit("U_gamma." + ks, static_cast<int>(hs.size()), numerical_rank(sample_U_gamma(m, k, hs, tol)));
    }
  }
  if (m.n() > 0) {
    auto hs = h_multiples(x.cfg, m.grid);
    for (size_t K = 1; K <= hs.size(); ++K) {
      std::vector<ForwardCurve> sub(hs.begin(), hs.begin() + K);
      emit("U_psi_gamma.h", static_cast<int>(K), numerical_rank(sample_U_psi_gamma(m, sub, m.mpr.y_samples, tol)));
    }
    const auto& ys = m.mpr.y_samples;
    std::vector<ForwardCurve> h0{x.cfg.h0.on(m.grid)};
    for (size_t K = 1; K <= ys.size(); ++K) {
      std::vector<double> sub(ys.begin(), ys.begin() + K);
      emit("U_psi_gamma.y", static_cast<int>(K), numerical_rank(sample_U_psi_gamma(m, h0, sub, tol)));
    }
  }
  return 0;
}

inline int bessel(const Context& x) {
  const auto& c = x.cfg;
  const double y0 = c.y0 > 0.0 ? c.y0 : 0.25;
  auto id = bessel_identity(y0, c.t_max, c.dt, c.paths, x.seed, 4, x.opt.threads);
  std::optional<SupermartingaleCheck> sm;
  if (c.paths >= 30) sm = bessel_supermartingale(y0, c.t_max, c.dt, c.paths, x.seed, x.opt.threads);
  CsvReport r(x.path("bessel.csv"), x.meta("bessel", {{"y0", fmt(y0)}, {"dt", fmt(c.dt)}, {"refine", "4"}}));
  r.row({"metric", "value"});
  auto row = [&](const std::string& k, double v) { r.row({k, fmt(v)}); };
  row("identity.mean_sup_rel_error", id.coarse.mean);
  row("identity.median_sup_rel_error", id.coarse.median);
  row("identity.q99_sup_rel_error", id.coarse.q99);
  row("identity.worst_sup_rel_error", id.coarse.worst);
  row("identity.fine_mean_sup_rel_error", id.fine.mean);
  row("identity.contraction", id.contraction);
  if (sm) {
    row("supermartingale.Z0", sm->z0);
    row("supermartingale.mean_Z", sm->mean_Z);
    row("supermartingale.se_Z", sm->se_Z);
    row("supermartingale.deficit_Z_in_se", sm->deficit_Z());
    row("supermartingale.mean_Y", sm->mean_Y);
    row("supermartingale.se_Y", sm->se_Y);
    row("supermartingale.deficit_Y_in_se", sm->deficit_Y());
    row("supermartingale.floor_hits", static_cast<double>(sm->floor_hits));
  }
  for (const auto& comp : c.components) {
    if (!comp.is_table()) continue;
    if (c.mpr.psi_kind != MprFamily::PsiKind::zero && c.mpr.psi_kind != MprFamily::PsiKind::constant_in_x)
      throw Unsupported("the Poisson extension needs Psi constant in x");
    double psi = c.mpr.psi(y0, 0.0);
    auto pe = bessel_poisson_extension(y0, c.t_max, c.dt, c.paths, x.seed, comp, psi, x.opt.threads);
    row("poisson.psi", pe.psi);
    row("poisson.intensity", pe.intensity);
    row("poisson.jumps", static_cast<double>(pe.jumps));
    row("poisson.mean_sup_rel_error", pe.factor_error.mean);
    row("poisson.worst_sup_rel_error", pe.factor_error.worst);
    break;
  }
  return 0;
}

inline int oracles(const Context& x) {
  auto s = run_oracle_suite(x.seed, 100);
  CsvReport r(x.path("oracles.csv"), x.meta("oracles", {{"certificate_threshold", fmt(kHpCertificateThreshold)},
                                                        {"transform_gap", fmt(kTransformGap)},
                                                        {"max_condition", fmt(kMaxCondition)}}));
  r.row({"check", "cases", "failures", "detail"});
  r.row({"vandermonde_vs_rank", fmt(s.family_cases), fmt(s.family_disagreements), "disagreements"});
  r.row({"laplace_distinct", fmt(s.distinct_pairs), fmt(s.distinct_pairs - s.distinct_detected), "missed"});
  r.row({"laplace_equal", fmt(s.equal_pairs), fmt(s.false_separations),
         "false separations; inconclusive=" + fmt(s.equal_inconclusive)});
  r.row({"laplace_solve_residual", fmt(s.equal_pairs), fmt(s.max_residual > 1e-8 ? 1 : 0), "max=" + fmt(s.max_residual)});
  return 0;
}

}  // namespace detail

inline int run(const std::string& command, const ScenarioConfig& cfg, const RunOptions& opt) {
  detail::Context x{cfg, opt, opt.seed.value_or(cfg.seed)};
  std::filesystem::create_directories(opt.out_dir);
  if (command == "simulate") return detail::simulate(x);
  if (command == "martingale") return detail::martingale(x);
  if (command == "invariance") return detail::invariance(x);
  if (command == "rank") return detail::rank(x);
  if (command == "bessel") return detail::bessel(x);
  if (command == "oracles") return detail::oracles(x);
  throw ConfigError("unknown command '" + command + "'");
}

// Loads the config (defaults when the path is empty) and maps failures to exit code 1.
inline int run(const std::string& command, const std::string& config_path, const std::vector<std::string>& overrides,
               const RunOptions& opt, std::ostream& err = std::cerr) {
  try {
    if (config_path.empty()) {
      std::istringstream none;
      return run(command, parse_config(none, overrides), opt);
    }
    return run(command, load_config(config_path, overrides), opt);
  } catch (const std::exception& e) {
    err << "hjmm_lab " << command << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hjmm::cli
