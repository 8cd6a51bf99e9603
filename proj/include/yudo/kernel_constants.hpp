#pragma once

// The structural constants of a kernel gathered in one record, plus the
// divergence residual of K omega used for C3.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/kernels.hpp"
#include "yudo/norms.hpp"
#include "yudo/velocity.hpp"

namespace yudo {

/// Central-difference divergence of v at x with step h.
inline double fd_divergence(const VelocityField& v, const Point& x, double h) {
  const Vec2 e1{h, 0.0}, e2{0.0, h};
  return (v.eval(x + e1).x1 - v.eval(x - e1).x1 + v.eval(x + e2).x2 - v.eval(x - e2).x2) / (2.0 * h);
}

/// max over probes of |div (K omega)| / ||omega||_1 by central differences.
/// Probes must stay at least 3 fd_step away from every particle.
inline double estimate_C3_divergence(const KernelSpec& k, const ParticleField& field,
                                     const std::vector<Point>& probes, double fd_step) {
  if (!(fd_step > 0.0)) throw InvalidParameter("estimate_C3_divergence: fd_step must be > 0");
  const double l1 = lp_norm(field, 1.0);
  if (l1 == 0.0 || probes.empty()) return 0.0;
  for (const auto& x : probes)
    for (const auto& y : field.positions)
      if (field.domain.distance(x, y) < 3.0 * fd_step)
        throw InvalidParameter("estimate_C3_divergence: probe closer than 3 fd_step to a particle");
  const VelocityField v(k, field);
  std::vector<double> div(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) { div[i] = std::abs(fd_divergence(v, probes[i], fd_step)); });
  return *std::max_element(div.begin(), div.end()) / l1;
}

struct KernelConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  std::size_t sample_count = 0;
  /// Smallest separation admitted by the samplers (pairs, and triples from z).
  double min_separation = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    for (double c : {C1, C2, C3})
      if (!(c >= 0.0) || !std::isfinite(c)) throw NumericalBlowup(0, "kernel constants must be finite and >= 0");
  }
};

struct KernelCheckOptions {
  std::size_t samples = 10000;
  double r_min = 1e-4;
  double r_max = 1.0;
  std::uint64_t seed = 0;
  Box box{-1.0, -1.0, 1.0, 1.0};
  double fd_step = 1e-3;
};

/// Smooth test field for the divergence residual: a Gaussian on a coarse
/// lattice (mean-corrected on the torus), with probes between the particles.
inline std::pair<ParticleField, std::vector<Point>> divergence_test_setup(const Domain& d) {
  const double L = d.is_torus() ? d.side() : 2.0;
  const Point c = d.is_torus() ? Point{L / 2, L / 2} : Point{0.0, 0.0};
  const double h = L / 16.0;
  const Box box = d.is_torus() ? d.cell() : Box{-1.0, -1.0, 1.0, 1.0};
  auto f = uniform_lattice(d, box, h, [&](const Point& x) {
    const double r2 = norm2(d.displacement(x, c));
    return std::exp(-r2 / (0.1 * L * L)) + 1e-3;
  });
  if (d.is_torus()) {
    const double mean = f.mass() / (L * L);
    for (auto& v : f.values) v -= mean;
  }
  std::vector<Point> probes;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      probes.push_back({box.lo1 + (4 * i + 2) * h, box.lo2 + (4 * j + 2) * h});
  return {f, probes};
}

inline KernelConstants verify_kernel(const KernelSpec& k, const KernelCheckOptions& o) {
  KernelConstants kc;
  kc.sample_count = o.samples;
  kc.min_separation = o.r_min;
  kc.seed = o.seed;
  const Domain& d = k.domain();
  const double r_max = d.is_torus() ? std::min(o.r_max, 0.375 * d.side()) : o.r_max;
  const Box box = d.is_torus() ? d.cell() : o.box;
  kc.C1 = estimate_C1(k, PairSampler{box, r_max, o.seed}, o.samples, o.r_min);
  kc.C2 = estimate_C2(k, TripleSampler{box, 0.75 * r_max, o.seed}, o.samples, o.r_min);
  const auto [field, probes] = divergence_test_setup(k.domain());
  kc.C3 = estimate_C3_divergence(k, field, probes, o.fd_step);
  kc.validate();
  return kc;
}

}  // namespace yudo
