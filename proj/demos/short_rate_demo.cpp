// Simulates the Vasicek + jump table model and prints short-rate and bond
// statistics at a few dates.

#include <algorithm>
#include <cstdio>

#include "hjmm/hjmm_sim.hpp"

int main() {
  using namespace hjmm;
  ModelSpec m;
  m.grid = make_grid(10.0, 201);
  m.sigma = {QuasiExponentialSpec::vasicek(0.02, 0.1)};
  m.gamma = {QuasiExponentialSpec::constant(0.01)};
  m.drivers = {1, {LevyComponentSpec::jump_table({{-1.0, 0.5}, {0.5, 1.0}, {2.0, 0.25}})}};
  m.mpr.theta_kind = MprFamily::ThetaKind::constant_vector;
  m.mpr.theta_const = {0.3};

  SimOptions o;
  o.t_max = 2.0;
  o.dt = 0.05;
  o.n_paths = 500;
  o.maturities = {5.0};
  o.record_every = 10;
  auto h0 = ForwardCurve::from(m.grid, [](double x) { return 0.03 + 0.01 * (1.0 - std::exp(-0.3 * x)); });
  auto paths = simulate(m, h0, o);

  std::printf("%6s %10s %10s %10s %12s\n", "t", "R q05", "R median", "R q95", "mean P(5)");
  for (size_t j = 0; j < paths[0].times.size(); ++j) {
    std::vector<double> r;
    double p = 0.0;
    for (const auto& s : paths) {
      r.push_back(s.R[j]);
      p += s.bonds[j][0] / paths.size();
    }
    std::sort(r.begin(), r.end());
    std::printf("%6.2f %10.5f %10.5f %10.5f %12.6f\n", paths[0].times[j], r[r.size() / 20], r[r.size() / 2],
                r[r.size() * 19 / 20], p);
  }
}
