#pragma once

// Frozen-velocity time stepping: on each interval [jT/n, (j+1)T/n] the
// velocity is computed once from the field entering the interval and the
// particles are carried through that time-independent field by RK4.
// Vorticity values ride along unchanged.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/growth.hpp"
#include "yudo/kernels.hpp"
#include "yudo/norms.hpp"
#include "yudo/numeric.hpp"
#include "yudo/velocity.hpp"

namespace yudo {

/// Twice the mean interparticle spacing sqrt(area / N).
inline double default_blob_delta(const ParticleField& f) {
  if (f.empty()) return 0.0;
  return 2.0 * std::sqrt(f.area() / double(f.size()));
}

struct SimConfig {
  KernelSpec kernel = KernelSpec::biot_savart_plane();
  double T = 1.0;
  int n_steps = 32;
  int substeps = 4;
  /// Number of output intervals; must divide n_steps. 0 means every step.
  int snapshots = 0;
  /// Mollification length applied to the kernel; unset means default_blob_delta.
  std::optional<double> blob_delta;
  bool track_jacobian = false;
  double jacobian_fd_step = 1e-5;
  std::vector<double> monitor_p_grid = {2.0, 4.0, 8.0};
  double monitor_radius = 1.0;
  double monitor_spacing = 0.5;
  /// Probe grid points per axis for the sup |v| estimate.
  int probe_points = 16;
  std::optional<GrowthFunction> theta;

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidParameter("config: T must be > 0");
    if (n_steps < 1) throw InvalidParameter("config: n_steps must be >= 1");
    if (substeps < 1) throw InvalidParameter("config: substeps must be >= 1");
    if (snapshots < 0 || (snapshots > 0 && n_steps % snapshots != 0))
      throw InvalidParameter("config: snapshots must divide n_steps");
    if (blob_delta && !(*blob_delta >= 0.0)) throw InvalidParameter("config: blob_delta must be >= 0");
    if (!(jacobian_fd_step > 0.0)) throw InvalidParameter("config: jacobian_fd_step must be > 0");
    if (probe_points < 0) throw InvalidParameter("config: probe_points must be >= 0");
    for (double p : monitor_p_grid)
      if (!(p >= 1.0) || std::isinf(p)) throw InvalidParameter("config: monitor p values must lie in [1, inf)");
  }

  double dt() const { return T / n_steps; }
  int steps_per_snapshot() const { return snapshots == 0 ? 1 : n_steps / snapshots; }

  KernelSpec effective_kernel(const ParticleField& omega0) const {
    return kernel.with_blob(blob_delta ? *blob_delta : default_blob_delta(omega0));
  }
};

struct MonitorRow {
  double t = 0.0;
  double l1 = 0.0;
  double linf = 0.0;
  std::vector<double> lp_ul;  // aligned with the config's monitor_p_grid
  std::optional<double> y_theta_ul;
  double R = 0.0;
};

struct SimState {
  ParticleField field;
  /// X(t, x0) - x0 per particle, accumulated without periodic wrapping.
  std::vector<Vec2> flow_displacement;
  /// (t, integral of sup |v| from 0 to t) at every step boundary.
  std::vector<std::pair<double, double>> R_of_t;
  std::size_t step = 0;

  double R() const { return R_of_t.empty() ? 0.0 : R_of_t.back().second; }
};

struct Snapshot {
  std::size_t step = 0;
  ParticleField field;
  std::vector<Vec2> flow_displacement;
  MonitorRow monitor;
};

struct Trajectory {
  KernelSpec kernel = KernelSpec::biot_savart_plane();
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<double, double>> R_of_t;
  /// sup |v| of the frozen field on each interval.
  std::vector<double> frozen_sup;

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& s : snapshots) t.push_back(s.field.time_stamp);
    return t;
  }
};

inline SimState initial_state(const ParticleField& omega0) {
  SimState s;
  s.field = omega0;
  s.flow_displacement.assign(omega0.size(), Vec2{});
  s.R_of_t.push_back({omega0.time_stamp, 0.0});
  return s;
}

inline MonitorRow monitor(const ParticleField& f, double R, const SimConfig& cfg) {
  MonitorRow m;
  m.t = f.time_stamp;
  m.l1 = lp_norm(f, 1.0);
  m.linf = lp_norm(f, std::numeric_limits<double>::infinity());
  m.lp_ul = lp_ul_norms(f, cfg.monitor_p_grid, cfg.monitor_radius, cfg.monitor_spacing);
  if (cfg.theta && !cfg.monitor_p_grid.empty()) {
    double best = 0.0;
    for (std::size_t k = 0; k < m.lp_ul.size(); ++k) best = std::max(best, m.lp_ul[k] / (*cfg.theta)(cfg.monitor_p_grid[k]));
    m.y_theta_ul = best;
  }
  m.R = R;
  return m;
}

/// Probe points for sup |v|: a regular grid over the particle bounding box
/// padded by 1/2 (the fundamental cell on the torus).
inline std::vector<Point> sup_probe_grid(const ParticleField& f, int points) {
  std::vector<Point> probes;
  if (points <= 0 || f.empty()) return probes;
  const Box b = f.domain.is_torus() ? f.domain.cell() : bounding_box(f.positions).padded(0.5);
  for (int j = 0; j < points; ++j)
    for (int i = 0; i < points; ++i)
      probes.push_back({b.lo1 + (i + 0.5) * b.width() / points, b.lo2 + (j + 0.5) * b.height() / points});
  return probes;
}

/// Carries the particles through the frozen field `v` over a time span `dt`
/// (negative to go backwards) with `substeps` RK4 steps. Particle i does not
/// feel source i of the singular plane kernel. When `weights` is non-null
/// they follow dw/dt = div v(X) w. Throws NumericalBlowup(step) on a
/// non-finite position.
inline void advect_frozen(const VelocityField& v, std::vector<Point>& pos, std::vector<Vec2>& disp,
                          std::vector<double>* weights, double dt, int substeps, std::size_t step,
                          double fd_step = 1e-5) {
  const bool self_skip = v.kernel().kind() == KernelSpec::Kind::BiotSavartPlane && v.kernel().blob_delta() == 0.0 &&
                         v.source_count() == pos.size();
  const Domain& d = v.domain();
  const double h = dt / substeps;
  parallel_for(pos.size(), [&](std::size_t i) {
    const std::size_t skip = self_skip ? i : std::numeric_limits<std::size_t>::max();
    auto vel = [&](const Point& x) { return v.eval_excluding(x, skip); };
    auto div = [&](const Point& x) {
      const Vec2 e1{fd_step, 0.0}, e2{0.0, fd_step};
      return (vel(x + e1).x1 - vel(x - e1).x1 + vel(x + e2).x2 - vel(x - e2).x2) / (2.0 * fd_step);
    };
    Point x = pos[i];
    Vec2 total{};
    double logw = weights ? std::log((*weights)[i]) : 0.0;
    for (int s = 0; s < substeps; ++s) {
      const Vec2 k1 = vel(x);
      const Vec2 k2 = vel(x + k1 * (0.5 * h));
      const Vec2 k3 = vel(x + k2 * (0.5 * h));
      const Vec2 k4 = vel(x + k3 * h);
      if (weights) {
        const double g1 = div(x), g2 = div(x + k1 * (0.5 * h)), g3 = div(x + k2 * (0.5 * h)), g4 = div(x + k3 * h);
        logw += h / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
      }
      const Vec2 dx = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
      total += dx;
      x = d.reduce(x + dx);
      if (!is_finite(x) || !std::isfinite(logw))
        throw NumericalBlowup(step, "non-finite state for particle " + std::to_string(i) + " in substep " +
                                        std::to_string(s));
    }
    pos[i] = x;
    disp[i] += total;
    if (weights) (*weights)[i] = std::exp(logw);
  });
}

/// One frozen interval. Returns the sup |v| estimate of the frozen field.
inline double step_frozen(SimState& state, const SimConfig& cfg, const KernelSpec& kernel, std::size_t j) {
  if (j != state.step || j >= static_cast<std::size_t>(cfg.n_steps))
    throw InvalidParameter("step_frozen: step index out of sequence");
  const double dt = cfg.dt();
  double sup = 0.0;
  if (!state.field.empty()) {
    const VelocityField v(kernel, state.field);
    for (const auto& u : v.evaluate_at_sources()) sup = std::max(sup, norm(u));
    const auto probes = sup_probe_grid(state.field, cfg.probe_points);
    std::vector<double> ps(probes.size());
    parallel_for(probes.size(), [&](std::size_t i) { ps[i] = norm(v.eval_pv(probes[i])); });
    for (double u : ps) sup = std::max(sup, u);
    const bool jac = cfg.track_jacobian && !kernel.divergence_free();
    advect_frozen(v, state.field.positions, state.flow_displacement, jac ? &state.field.weights : nullptr, dt,
                  cfg.substeps, j, cfg.jacobian_fd_step);
  }
  state.step = j + 1;
  state.field.time_stamp = cfg.T * double(j + 1) / cfg.n_steps;
  state.R_of_t.push_back({state.field.time_stamp, state.R() + dt * sup});
  return sup;
}

namespace detail {

inline void check_torus_mean(ParticleField& f) {
  if (!f.domain.is_torus() || f.empty()) return;
  const double L = f.domain.side();
  const double mean = f.mass() / (L * L);
  if (std::abs(mean) > 1e-6)
    throw InvalidInput("torus vorticity must have zero mean (compatibility condition); discrete mean is " +
                       std::to_string(mean));
  if (std::abs(mean) > 1e-10) {
    const double shift = f.mass() / f.area();
    for (auto& v : f.values) v -= shift;
  }
}

}  // namespace detail

/// Runs the scheme from omega0 over [0, T]; snapshots at t = 0 and every
/// steps_per_snapshot() steps. `on_snapshot` sees each snapshot as it is made.
inline Trajectory run(const ParticleField& omega0, const SimConfig& cfg,
                      const std::function<void(const Snapshot&)>& on_snapshot = {}) {
  cfg.validate();
  omega0.validate();
  if (omega0.domain.kind() != cfg.kernel.domain().kind() ||
      (omega0.domain.is_torus() && omega0.domain.side() != cfg.kernel.domain().side()))
    throw InvalidInput("initial field and kernel live on different domains");
  ParticleField start = omega0;
  detail::check_torus_mean(start);
  const KernelSpec kernel = cfg.effective_kernel(start);

  Trajectory traj;
  traj.kernel = kernel;
  SimState state = initial_state(start);
  auto emit = [&] {
    Snapshot s{state.step, state.field, state.flow_displacement, monitor(state.field, state.R(), cfg)};
    if (on_snapshot) on_snapshot(s);
    traj.snapshots.push_back(std::move(s));
  };
  emit();
  const int every = cfg.steps_per_snapshot();
  for (int j = 0; j < cfg.n_steps; ++j) {
    traj.frozen_sup.push_back(step_frozen(state, cfg, kernel, static_cast<std::size_t>(j)));
    if ((j + 1) % every == 0) emit();
  }
  traj.R_of_t = state.R_of_t;
  return traj;
}

struct GrowthCheckReport {
  std::string variant;  // "lp_ul" or "y_theta_ul"
  double p = 0.0;
  double norm0 = 0.0;  // ||omega0|| in the chosen space
  double A = 0.0;      // fitted constant
  std::vector<double> times;
  std::vector<double> R;
  std::vector<double> comparison;
  /// min over times of comparison - R.
  double margin = 0.0;
  bool within = true;
};

/// Compares R(t) with the solution Z of Z' = A (1 + M (1 + Z)^e), Z(0) = 0,
/// where A is fitted so that Z'(0) equals the first-interval slope of R.
/// e = 2/p for the L^p_ul variant (M = ||omega0||_{L^p_ul}); e = 1 for the
/// Y^Theta_ul variant (pass p = 0, M = ||omega0||_{Y^Theta_ul}).
inline GrowthCheckReport r_growth_check(const Trajectory& traj, double M, double p) {
  GrowthCheckReport rep;
  rep.variant = p > 0.0 ? "lp_ul" : "y_theta_ul";
  rep.p = p;
  rep.norm0 = M;
  const double ex = p > 0.0 ? 2.0 / p : 1.0;
  for (const auto& [t, r] : traj.R_of_t) {
    rep.times.push_back(t);
    rep.R.push_back(r);
  }
  if (rep.times.size() < 2) return rep;
  const double slope0 = (rep.R[1] - rep.R[0]) / (rep.times[1] - rep.times[0]);
  rep.A = slope0 / (1.0 + M);
  auto rhs = [&](double z) { return rep.A * (1.0 + M * std::pow(1.0 + z, ex)); };
  double z = 0.0;
  rep.comparison.push_back(0.0);
  for (std::size_t k = 1; k < rep.times.size(); ++k) {
    const int sub = 64;
    const double h = (rep.times[k] - rep.times[k - 1]) / sub;
    for (int s = 0; s < sub; ++s) {
      const double a = rhs(z), b = rhs(z + 0.5 * h * a), c = rhs(z + 0.5 * h * b), d = rhs(z + h * c);
      z += h / 6.0 * (a + 2 * b + 2 * c + d);
    }
    rep.comparison.push_back(z);
  }
  rep.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    rep.margin = std::min(rep.margin, rep.comparison[k] - rep.R[k]);
    // R is a Riemann sum and Z its matched-slope ODE; allow rounding at the first step
    if (rep.R[k] > rep.comparison[k] * (1.0 + 1e-9) + 1e-300) rep.within = false;
  }
  return rep;
}

struct CascadeReport {
  std::vector<double> levels;
  std::vector<std::string> test_names;
  /// pairings[level][test]: sum_i w_i omega^n_i phi(X^n_i(T)).
  std::vector<std::vector<double>> pairings;
  /// cauchy_gaps[k][test]: |pairing at level k+1 - pairing at level k|,
  /// accumulated particle by particle.
  std::vector<std::vector<double>> cauchy_gaps;
  /// Per test function: gaps positive and strictly decreasing in k.
  std::vector<bool> decreasing;
};

struct TestFunction {
  std::string name;
  std::function<double(const Point&)> phi;
};

/// Gaussian test function exp(-|x - c|^2 / s^2).
inline TestFunction gaussian_test_function(const Point& c, double s) {
  return {"gauss(" + std::to_string(c.x1) + "," + std::to_string(c.x2) + ";" + std::to_string(s) + ")",
          [c, s](const Point& x) { return std::exp(-norm2(x - c) / (s * s)); }};
}

/// Runs the scheme from clamp(omega0, n) for each level and compares the
/// final-time pairings with the test functions.
inline CascadeReport truncation_cascade(const ParticleField& omega0, const std::vector<double>& levels,
                                        const SimConfig& cfg, const std::vector<TestFunction>& tests) {
  if (levels.empty()) throw InvalidParameter("cascade: need at least one level");
  for (std::size_t k = 0; k < levels.size(); ++k)
    if (!(levels[k] > 0.0) || (k > 0 && !(levels[k] > levels[k - 1])))
      throw InvalidParameter("cascade: levels must be positive and strictly increasing");
  if (tests.empty()) throw InvalidParameter("cascade: need at least one test function");
  CascadeReport rep;
  rep.levels = levels;
  for (const auto& t : tests) rep.test_names.push_back(t.name);
  std::vector<ParticleField> finals;
  for (double n : levels) {
    SimConfig c = cfg;
    c.snapshots = 1;
    const auto traj = run(clamp(omega0, n), c);
    finals.push_back(traj.snapshots.back().field);
    std::vector<double> row;
    for (const auto& t : tests) row.push_back(pairing(finals.back(), t.phi));
    rep.pairings.push_back(row);
  }
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    const auto& a = finals[k];
    const auto& b = finals[k + 1];
    std::vector<double> row;
    for (const auto& t : tests) {
      CompensatedSum s;
      for (std::size_t i = 0; i < a.size(); ++i)
        s.add(b.weights[i] * b.values[i] * t.phi(b.positions[i]) - a.weights[i] * a.values[i] * t.phi(a.positions[i]));
      row.push_back(std::abs(s.value()));
    }
    rep.cauchy_gaps.push_back(row);
  }
  for (std::size_t j = 0; j < tests.size(); ++j) {
    bool ok = !rep.cauchy_gaps.empty() && rep.cauchy_gaps[0][j] > 0.0;
    for (std::size_t k = 1; k < rep.cauchy_gaps.size(); ++k)
      ok = ok && rep.cauchy_gaps[k][j] < rep.cauchy_gaps[k - 1][j];
    rep.decreasing.push_back(ok);
  }
  return rep;
}

}  // namespace yudo
