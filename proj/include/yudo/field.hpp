#pragma once

// Lagrangian particle representation of a vorticity field and the initial
// discretizations used to build one.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/numeric.hpp"

namespace yudo {

/// Vorticity omega(t, .) as a particle cloud: sum_i weights[i] * values[i] * delta(x - positions[i]).
/// Weights are quadrature cell areas, values are vorticity samples.
struct ParticleField {
  Domain domain = Domain::plane();
  std::vector<Point> positions;
  std::vector<double> weights;
  std::vector<double> values;
  double time_stamp = 0.0;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  /// Throws InvalidInput unless the invariants hold.
  void validate() const {
    if (positions.size() != weights.size() || positions.size() != values.size())
      throw InvalidInput("particle field: positions, weights and values differ in length");
    if (!(time_stamp >= 0.0) || !std::isfinite(time_stamp))
      throw InvalidInput("particle field: time stamp must be finite and >= 0");
    for (std::size_t i = 0; i < size(); ++i) {
      if (!is_finite(positions[i])) throw InvalidInput("particle field: non-finite position");
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
        throw InvalidInput("particle field: weights must be positive and finite");
      if (!std::isfinite(values[i])) throw InvalidInput("particle field: non-finite value");
      if (domain.is_torus() && !(domain.reduce(positions[i]) == positions[i]))
        throw InvalidInput("particle field: torus positions must be canonically reduced");
    }
  }

  /// Signed discrete mass sum_i w_i omega_i.
  double mass() const {
    CompensatedSum s;
    for (std::size_t i = 0; i < size(); ++i) s.add(weights[i] * values[i]);
    return s.value();
  }

  /// Total quadrature area sum_i w_i.
  double area() const {
    CompensatedSum s;
    for (double w : weights) s.add(w);
    return s.value();
  }
};

/// Builds a field, reducing torus positions, and validates it.
inline ParticleField make_field(const Domain& d, std::vector<Point> positions, std::vector<double> weights,
                                std::vector<double> values, double time_stamp = 0.0) {
  ParticleField f{d, std::move(positions), std::move(weights), std::move(values), time_stamp};
  for (auto& p : f.positions) p = d.reduce(p);
  f.validate();
  return f;
}

/// Cell-centred lattice of step h over `box` (over the fundamental cell on the
/// torus); keeps cells where omega(centre) != 0. Weights are the cell area.
template <class F>
ParticleField uniform_lattice(const Domain& d, const Box& box, double h, F&& omega) {
  if (!(h > 0.0)) throw InvalidParameter("uniform_lattice: spacing must be positive");
  Box b = d.is_torus() ? d.cell() : box;
  if (b.empty()) throw InvalidParameter("uniform_lattice: empty box");
  std::size_t n1, n2;
  double h1, h2;
  if (d.is_torus()) {
    n1 = n2 = static_cast<std::size_t>(std::max(1.0, std::round(d.side() / h)));
    h1 = h2 = d.side() / double(n1);
  } else {
    n1 = static_cast<std::size_t>(std::max(1.0, std::round(b.width() / h)));
    n2 = static_cast<std::size_t>(std::max(1.0, std::round(b.height() / h)));
    h1 = b.width() / double(n1);
    h2 = b.height() / double(n2);
  }
  ParticleField f;
  f.domain = d;
  for (std::size_t j = 0; j < n2; ++j) {
    for (std::size_t i = 0; i < n1; ++i) {
      const Point c{b.lo1 + (double(i) + 0.5) * h1, b.lo2 + (double(j) + 0.5) * h2};
      const double w = omega(c);
      if (w == 0.0) continue;
      f.positions.push_back(d.reduce(c));
      f.weights.push_back(h1 * h2);
      f.values.push_back(w);
    }
  }
  f.validate();
  return f;
}

/// Ring edges 0 = e_0 < e_1 < ... < e_K = R with equal widths.
inline std::vector<double> uniform_ring_edges(double radius, int rings) {
  if (!(radius > 0.0) || rings < 1) throw InvalidParameter("uniform_ring_edges: bad arguments");
  std::vector<double> e(rings + 1);
  for (int k = 0; k <= rings; ++k) e[k] = radius * k / rings;
  return e;
}

/// Ring edges 0, r_min, r_min q, r_min q^2, ... up to r_split, then uniform
/// steps of width dr up to R (the last edge is exactly R).
inline std::vector<double> graded_ring_edges(double r_min, double r_split, double radius, double ratio,
                                             double dr) {
  if (!(r_min > 0.0 && r_min <= r_split && r_split <= radius && ratio > 1.0 && dr > 0.0))
    throw InvalidParameter("graded_ring_edges: need 0 < r_min <= r_split <= R, ratio > 1, dr > 0");
  std::vector<double> e{0.0};
  double r = r_min;
  // log-stepping keeps the geometric part exact over hundreds of decades
  const double log_ratio = std::log(ratio);
  const double log_min = std::log(r_min);
  for (int k = 0; r < r_split * (1.0 - 1e-12); ++k) {
    e.push_back(r);
    r = std::exp(log_min + (k + 1) * log_ratio);
  }
  r = e.back();
  while (radius - r > 0.5 * dr) {
    r = std::min(radius, r + dr);
    e.push_back(r);
  }
  if (e.back() < radius) e.push_back(radius);
  return e;
}

/// Equal-area-cell polar lattice around `center`. Ring k spans [edges[k],
/// edges[k+1]]; a ring starting at 0 is a single central particle (valued at
/// radius 2b/3), other rings carry max(min_count, round(2 pi r / width))
/// particles at the area-centroid radius, staggered by half a cell on odd rings. Cells with omega == 0 are
/// dropped. `fixed_count` > 0 forces that many particles on every ring.
template <class F>
ParticleField polar_lattice(const Point& center, const std::vector<double>& edges, F&& omega,
                            int min_count = 6, int fixed_count = 0) {
  if (edges.size() < 2) throw InvalidParameter("polar_lattice: need at least two edges");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    if (!(edges[k + 1] > edges[k]) || edges[k] < 0.0)
      throw InvalidParameter("polar_lattice: edges must be increasing and nonnegative");
  ParticleField f;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    const double area = kPi * (b - a) * (b + a);
    if (a == 0.0) {
      // sampled at the disc's mean radius 2b/3 so radial singularities at the centre stay finite
      const double v = omega(Point{center.x1 + (2.0 / 3.0) * b, center.x2});
      if (v != 0.0) {
        f.positions.push_back(center);
        f.weights.push_back(area);
        f.values.push_back(v);
      }
      continue;
    }
    // (2/3)(b^3 - a^3)/(b^2 - a^2) written without cancellation
    const double rc = (2.0 / 3.0) * (a * a + a * b + b * b) / (a + b);
    int m = fixed_count > 0 ? fixed_count
                            : std::max(min_count, static_cast<int>(std::lround(kTwoPi * rc / (b - a))));
    const double offset = (k % 2 == 1) ? 0.5 : 0.0;
    for (int j = 0; j < m; ++j) {
      const double th = kTwoPi * (j + offset) / m;
      const Point p{center.x1 + rc * std::cos(th), center.x2 + rc * std::sin(th)};
      const double v = omega(p);
      if (v == 0.0) continue;
      f.positions.push_back(p);
      f.weights.push_back(area / m);
      f.values.push_back(v);
    }
  }
  f.validate();
  return f;
}

/// Uniform patch of vorticity `value` on the disc of radius R with `rings` rings.
inline ParticleField disc_patch(const Point& center, double radius, int rings, double value = 1.0) {
  return polar_lattice(center, uniform_ring_edges(radius, rings), [value](const Point&) { return value; });
}

/// Uniform elliptical patch with semi-axes a (along x1) and b (along x2): a
/// unit-disc polar lattice mapped by diag(a, b), so cell areas scale by ab.
inline ParticleField ellipse_patch(double a, double b, int rings, double value = 1.0) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidParameter("ellipse_patch: semi-axes must be positive");
  ParticleField f = disc_patch({0.0, 0.0}, 1.0, rings, value);
  for (auto& p : f.positions) p = {a * p.x1, b * p.x2};
  for (auto& w : f.weights) w *= a * b;
  return f;
}

}  // namespace yudo
