#pragma once

// Discrete Lebesgue norms, uniformly-localized norms ||.||_{L^p_ul} and
// ||.||_{Y^Theta_ul}, truncation, and pairings against test functions.
//
// The supremum over ball centres is taken over a finite grid, so localized
// norms are lower bounds of the continuum quantity; reports record the grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/growth.hpp"
#include "yudo/numeric.hpp"

namespace yudo {

inline const std::vector<double>& default_p_grid() {
  static const std::vector<double> g{1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64};
  return g;
}

namespace detail {

inline double abs_pow(double v, double p) {
  const double a = std::abs(v);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

}  // namespace detail

/// (sum_i w_i |omega_i|^p)^(1/p); max_i |omega_i| for p = inf; 0 when empty.
inline double lp_norm(const ParticleField& f, double p) {
  if (!(p >= 1.0)) throw InvalidParameter("lp_norm: p must be >= 1");
  if (f.empty()) return 0.0;
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < f.size(); ++i) s.add(f.weights[i] * detail::abs_pow(f.values[i], p));
  return std::pow(s.value(), 1.0 / p);
}

/// Ball centres scanned by the localized norms: the periodic grid on the
/// torus, otherwise a grid over the support bounding box padded by the radius.
inline std::vector<Point> localized_centers(const ParticleField& f, double radius, double spacing) {
  if (f.domain.is_torus()) return ball_center_grid(f.domain, f.domain.cell(), spacing);
  return ball_center_grid(f.domain, bounding_box(f.positions).padded(radius), spacing);
}

/// max over centres c of (sum over |x_i - c| < radius of w_i |omega_i|^p)^(1/p),
/// for every p in `ps` at once.
inline std::vector<double> lp_ul_norms(const ParticleField& f, const std::vector<double>& ps, double radius,
                                       double spacing) {
  if (!(radius > 0.0)) throw InvalidParameter("lp_ul_norm: radius must be > 0");
  if (!(spacing > 0.0) || spacing > 0.5 * radius * (1.0 + 1e-12))
    throw InvalidParameter("lp_ul_norm: center spacing must lie in (0, radius/2]");
  for (double p : ps)
    if (!(p >= 1.0) || std::isinf(p)) throw InvalidParameter("lp_ul_norm: p must lie in [1, inf)");
  std::vector<double> best(ps.size(), 0.0);
  if (f.empty() || ps.empty()) return best;

  const auto centers = localized_centers(f, radius, spacing);
  const CellList cells(f.domain, f.positions, radius);
  std::vector<std::vector<double>> local(centers.size(), std::vector<double>(ps.size(), 0.0));
  parallel_for(centers.size(), [&](std::size_t c) {
    std::vector<std::size_t> inside;
    cells.for_each_candidate(centers[c], radius, [&](std::size_t i) {
      if (f.domain.distance(centers[c], f.positions[i]) < radius) inside.push_back(i);
    });
    std::sort(inside.begin(), inside.end());
    for (std::size_t k = 0; k < ps.size(); ++k) {
      CompensatedSum s;
      for (std::size_t i : inside) s.add(f.weights[i] * detail::abs_pow(f.values[i], ps[k]));
      local[c][k] = std::pow(s.value(), 1.0 / ps[k]);
    }
  });
  for (const auto& row : local)
    for (std::size_t k = 0; k < ps.size(); ++k) best[k] = std::max(best[k], row[k]);
  return best;
}

inline double lp_ul_norm(const ParticleField& f, double p, double radius = 1.0, double spacing = 0.5) {
  return lp_ul_norms(f, {p}, radius, spacing).front();
}

/// max over the p-grid of ||f||_{L^p_ul} / Theta(p).
template <class Theta>
double y_theta_ul_norm(const ParticleField& f, const Theta& theta, const std::vector<double>& p_grid,
                       double radius = 1.0, double spacing = 0.5) {
  if (p_grid.empty()) throw InvalidParameter("y_theta_ul_norm: empty p grid");
  const auto norms = lp_ul_norms(f, p_grid, radius, spacing);
  double best = 0.0;
  for (std::size_t k = 0; k < p_grid.size(); ++k) best = std::max(best, norms[k] / theta(p_grid[k]));
  return best;
}

struct RescaleReport {
  double p = 1.0;
  double r = 1.0;
  double R = 1.0;
  double norm_r = 0.0;
  double norm_R = 0.0;
  /// ||f||_{ul,R} / ((R/r)^(2/p) ||f||_{ul,r}); NaN when not applicable.
  double ratio = std::numeric_limits<double>::quiet_NaN();
  /// Number of radius-r balls used to cover a radius-R ball (squares of side r).
  double covering_number = 1.0;
  /// covering_number^(1/p), an upper bound for `ratio`.
  double covering_bound = 1.0;
  bool applicable = false;
  bool within_bound = true;
};

/// Compares the localized norms at two window radii r <= R against the
/// covering-number bound. Both scans use centre spacing r/2.
inline RescaleReport rescale_window_check(const ParticleField& f, double p, double r, double R) {
  if (!(r > 0.0) || !(R >= r)) throw InvalidParameter("rescale_window_check: need 0 < r <= R");
  RescaleReport rep;
  rep.p = p;
  rep.r = r;
  rep.R = R;
  rep.norm_r = lp_ul_norm(f, p, r, 0.5 * r);
  rep.norm_R = lp_ul_norm(f, p, R, 0.5 * r);
  const double per_axis = std::ceil(2.0 * R / r - 1e-12);
  rep.covering_number = per_axis * per_axis;
  rep.covering_bound = std::pow(rep.covering_number, 1.0 / p);
  if (rep.norm_r > 0.0) {
    rep.applicable = true;
    rep.ratio = rep.norm_R / (std::pow(R / r, 2.0 / p) * rep.norm_r);
    rep.within_bound = rep.ratio <= rep.covering_bound;
  }
  return rep;
}

/// Values clamped to [-n, n]; positions and weights unchanged.
inline ParticleField clamp(const ParticleField& f, double n) {
  if (!(n > 0.0)) throw InvalidParameter("clamp: level must be > 0");
  ParticleField g = f;
  for (auto& v : g.values) v = std::max(-n, std::min(n, v));
  return g;
}

/// sum_i w_i omega_i phi(x_i).
template <class Phi>
double pairing(const ParticleField& f, const Phi& phi) {
  CompensatedSum s;
  for (std::size_t i = 0; i < f.size(); ++i) s.add(f.weights[i] * f.values[i] * phi(f.positions[i]));
  return s.value();
}

struct NormReport {
  double l1 = 0.0;
  double linf = 0.0;
  std::map<double, double> lp_ul;
  std::optional<double> y_theta_ul;
  double window_radius = 1.0;
  double center_spacing = 0.5;
  std::vector<double> p_grid;
};

inline NormReport norm_report(const ParticleField& f, const std::vector<double>& p_grid, double radius,
                              double spacing, const std::optional<GrowthFunction>& theta = std::nullopt) {
  NormReport rep;
  rep.l1 = lp_norm(f, 1.0);
  rep.linf = lp_norm(f, std::numeric_limits<double>::infinity());
  rep.window_radius = radius;
  rep.center_spacing = spacing;
  rep.p_grid = p_grid;
  const auto ul = lp_ul_norms(f, p_grid, radius, spacing);
  for (std::size_t k = 0; k < p_grid.size(); ++k) rep.lp_ul[p_grid[k]] = ul[k];
  if (theta) {
    if (p_grid.empty()) throw InvalidParameter("norm_report: Y^Theta norm needs a nonempty p grid");
    double best = 0.0;
    for (std::size_t k = 0; k < p_grid.size(); ++k) best = std::max(best, ul[k] / (*theta)(p_grid[k]));
    rep.y_theta_ul = best;
  }
  return rep;
}

}  // namespace yudo
