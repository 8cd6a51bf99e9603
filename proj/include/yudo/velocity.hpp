#pragma once

// v = K omega by direct quadrature over a particle field, and empirical
// moduli of continuity of the resulting velocity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/growth.hpp"
#include "yudo/kernels.hpp"
#include "yudo/norms.hpp"
#include "yudo/numeric.hpp"

namespace yudo {

/// Velocity induced by a particle field through a kernel. Sources are copied
/// into a structure-of-arrays layout at construction; on the torus the
/// truncated Fourier coefficients of the field are precomputed so each
/// evaluation costs O(modes) instead of O(N * modes).
class VelocityField {
 public:
  VelocityField(KernelSpec kernel, const ParticleField& source) : kernel_(std::move(kernel)) {
    if (kernel_.domain().kind() != source.domain.kind() ||
        (source.domain.is_torus() && kernel_.domain().side() != source.domain.side()))
      throw InvalidParameter("velocity field: kernel and source live on different domains");
    const std::size_t n = source.size();
    x1_.resize(n);
    x2_.resize(n);
    s_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      x1_[j] = source.positions[j].x1;
      x2_[j] = source.positions[j].x2;
      s_[j] = source.weights[j] * source.values[j];
    }
    const double d = kernel_.blob_delta();
    inv_delta2_ = d > 0.0 ? 1.0 / (d * d) : 0.0;
    if (kernel_.kind() == KernelSpec::Kind::BiotSavartTorus) build_spectrum();
  }

  const KernelSpec& kernel() const { return kernel_; }
  const Domain& domain() const { return kernel_.domain(); }
  std::size_t source_count() const { return s_.size(); }
  Point source_position(std::size_t j) const { return {x1_[j], x2_[j]}; }

  /// v(x). With a singular plane kernel, x on top of a source throws.
  Vec2 eval(const Point& x) const { return eval_excluding(x, npos); }

  /// v(x) with sources sitting exactly at x left out (the principal value for
  /// the singular kernel, identical to eval otherwise).
  Vec2 eval_pv(const Point& x) const { return eval_excluding(x, kAllCoincident); }

  /// v(x) without source `skip`; used to move a particle through the field
  /// frozen from its own earlier position.
  Vec2 eval_excluding(const Point& x, std::size_t skip) const {
    switch (kernel_.kind()) {
      case KernelSpec::Kind::BiotSavartPlane:
        return plane_sum(x, skip);
      case KernelSpec::Kind::BiotSavartTorus:
        return spectral_eval(kernel_.domain().reduce(x));
      case KernelSpec::Kind::UserTabulated: {
        CompensatedVec2 acc;
        for (std::size_t j = 0; j < s_.size(); ++j)
          if (j != skip) acc.add(kernel_.table()->eval(x, {x1_[j], x2_[j]}) * s_[j]);
        return acc.value();
      }
    }
    return {};
  }

  /// v at every point, parallel over points.
  std::vector<Vec2> evaluate(const std::vector<Point>& xs) const {
    std::vector<Vec2> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { out[i] = eval(xs[i]); });
    return out;
  }

  /// v at each source position, leaving out the source's own contribution
  /// (the point-vortex convention; it is zero anyway for regular kernels).
  std::vector<Vec2> evaluate_at_sources() const {
    std::vector<Vec2> out(s_.size());
    parallel_for(s_.size(), [&](std::size_t i) { out[i] = eval_excluding({x1_[i], x2_[i]}, i); });
    return out;
  }

  /// v(x) - v(y), without the cancellation of subtracting two evaluations.
  Vec2 difference(const Point& x, const Point& y) const {
    switch (kernel_.kind()) {
      case KernelSpec::Kind::BiotSavartPlane: {
        CompensatedVec2 acc;
        const Vec2 e = x - y;
        for (std::size_t j = 0; j < s_.size(); ++j) {
          if (s_[j] == 0.0) continue;
          const Vec2 a{x.x1 - x1_[j], x.x2 - x2_[j]};
          const Vec2 b{y.x1 - x1_[j], y.x2 - x2_[j]};
          if (inv_delta2_ == 0.0 && (norm2(a) == 0.0 || norm2(b) == 0.0))
            throw SingularityError("velocity difference evaluated on top of a point source");
          acc.add(detail::plane_kernel_difference(a, b, e, inv_delta2_) * s_[j]);
        }
        return acc.value();
      }
      case KernelSpec::Kind::BiotSavartTorus:
        return spectral_difference(x, y);
      case KernelSpec::Kind::UserTabulated:
        return eval(x) - eval(y);
    }
    return {};
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  static constexpr std::size_t kAllCoincident = npos - 1;

  // Four interleaved partial sums: a fixed association order that does not
  // depend on how points are split across workers.
  Vec2 plane_sum(const Point& x, std::size_t skip) const {
    double u[4] = {0, 0, 0, 0}, w[4] = {0, 0, 0, 0};
    const std::size_t n = s_.size();
    const double px = x.x1, py = x.x2;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == skip) continue;
      const double dx = px - x1_[j], dy = py - x2_[j];
      const double r2 = dx * dx + dy * dy;
      if (r2 == 0.0) {
        if (skip == kAllCoincident || inv_delta2_ > 0.0 || s_[j] == 0.0) continue;
        throw SingularityError("singular velocity evaluated on top of a point source");
      }
      double f = s_[j] / (kTwoPi * r2);
      const double q = r2 * inv_delta2_;
      if (inv_delta2_ > 0.0 && q < detail::kBlobCutoff) f *= -std::expm1(-q);
      u[j & 3] -= dy * f;
      w[j & 3] += dx * f;
    }
    return {(u[0] + u[1]) + (u[2] + u[3]), (w[0] + w[1]) + (w[2] + w[3])};
  }

  void build_spectrum() {
    const TorusModes& tm = *kernel_.torus_modes();
    const int M = tm.cutoff();
    const std::size_t n = s_.size();
    const std::size_t stride = M + 1;
    // per-particle trig tables in each coordinate
    std::vector<double> c1(n * stride), sn1(n * stride), c2(n * stride), sn2(n * stride);
    parallel_for(n, [&](std::size_t j) {
      std::vector<double> a, b;
      tm.trig_table(x1_[j], a, b);
      std::copy(a.begin(), a.end(), c1.begin() + j * stride);
      std::copy(b.begin(), b.end(), sn1.begin() + j * stride);
      tm.trig_table(x2_[j], a, b);
      std::copy(a.begin(), a.end(), c2.begin() + j * stride);
      std::copy(b.begin(), b.end(), sn2.begin() + j * stride);
    });
    const auto& modes = tm.modes();
    cos_sum_.assign(modes.size(), 0.0);
    sin_sum_.assign(modes.size(), 0.0);
    parallel_for(modes.size(), [&](std::size_t k) {
      const int m1 = modes[k].m1, a2 = std::abs(modes[k].m2);
      const double sg = modes[k].m2 >= 0 ? 1.0 : -1.0;
      CompensatedSum cs, ss;
      for (std::size_t j = 0; j < n; ++j) {
        const double cA = c1[j * stride + m1], sA = sn1[j * stride + m1];
        const double cB = c2[j * stride + a2], sB = sg * sn2[j * stride + a2];
        cs.add(s_[j] * (cA * cB - sA * sB));
        ss.add(s_[j] * (sA * cB + cA * sB));
      }
      cos_sum_[k] = cs.value();
      sin_sum_[k] = ss.value();
    });
  }

  // sum over modes of coeff * (C sin(kx) - S cos(kx))
  Vec2 spectral_eval(const Point& x) const {
    const TorusModes& tm = *kernel_.torus_modes();
    std::vector<double> c1, s1, c2, s2;
    tm.trig_table(x.x1, c1, s1);
    tm.trig_table(x.x2, c2, s2);
    const auto& modes = tm.modes();
    Vec2 acc{};
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const int m1 = modes[k].m1, a2 = std::abs(modes[k].m2);
      const double sB = modes[k].m2 >= 0 ? s2[a2] : -s2[a2];
      const double ck = c1[m1] * c2[a2] - s1[m1] * sB;
      const double sk = s1[m1] * c2[a2] + c1[m1] * sB;
      acc += modes[k].coeff * (cos_sum_[k] * sk - sin_sum_[k] * ck);
    }
    return acc;
  }

  // sin A - sin B = 2 cos(mid) sin(half), cos A - cos B = -2 sin(mid) sin(half)
  Vec2 spectral_difference(const Point& x, const Point& y) const {
    const TorusModes& tm = *kernel_.torus_modes();
    const Vec2 e = kernel_.domain().displacement(x, y);
    const Vec2 mid = y + e * 0.5, half = e * 0.5;
    std::vector<double> cm1, sm1, cm2, sm2, ch1, sh1, ch2, sh2;
    tm.trig_table(mid.x1, cm1, sm1);
    tm.trig_table(mid.x2, cm2, sm2);
    tm.trig_table(half.x1, ch1, sh1);
    tm.trig_table(half.x2, ch2, sh2);
    const auto& modes = tm.modes();
    Vec2 acc{};
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const int m1 = modes[k].m1, a2 = std::abs(modes[k].m2);
      const double sg = modes[k].m2 >= 0 ? 1.0 : -1.0;
      const double cos_mid = cm1[m1] * cm2[a2] - sm1[m1] * sg * sm2[a2];
      const double sin_mid = sm1[m1] * cm2[a2] + cm1[m1] * sg * sm2[a2];
      const double sin_half = sh1[m1] * ch2[a2] + ch1[m1] * sg * sh2[a2];
      const double dsin = 2.0 * cos_mid * sin_half;
      const double dcos = -2.0 * sin_mid * sin_half;
      acc += modes[k].coeff * (cos_sum_[k] * dsin - sin_sum_[k] * dcos);
    }
    return acc;
  }

  KernelSpec kernel_;
  std::vector<double> x1_, x2_, s_;
  double inv_delta2_ = 0.0;
  std::vector<double> cos_sum_, sin_sum_;
};

struct SupNormReport {
  double q = 1.0;
  double p = 4.0;
  double sup = 0.0;
  /// max{1, 1/(p-2)} (||omega||_q + ||omega||_{p,ul}), implicit constant taken as 1.
  double bound = 0.0;
  double ratio = 0.0;
  std::size_t probes = 0;
};

/// Empirical sup |v| over the probes against the shape of the a priori bound.
inline SupNormReport sup_norm_check(const VelocityField& v, const ParticleField& source, double q, double p,
                                    const std::vector<Point>& probes, double radius = 1.0, double spacing = 0.5) {
  if (!(q >= 1.0 && q < 2.0)) throw InvalidParameter("sup_norm_check: q must lie in [1, 2)");
  if (!(p > 2.0) || std::isinf(p)) throw InvalidParameter("sup_norm_check: p must lie in (2, inf)");
  SupNormReport rep;
  rep.q = q;
  rep.p = p;
  rep.probes = probes.size();
  for (const auto& u : v.evaluate(probes)) rep.sup = std::max(rep.sup, norm(u));
  rep.bound = std::max(1.0, 1.0 / (p - 2.0)) * (lp_norm(source, q) + lp_ul_norm(source, p, radius, spacing));
  rep.ratio = rep.bound > 0.0 ? rep.sup / rep.bound : 0.0;
  return rep;
}

/// Sample i of a pair source depends only on i (and the source's own seed).
using PairSource = std::function<std::pair<Point, Point>(std::size_t)>;

/// x uniform in `box`, y = x + d u with d log-uniform in [d_min, d_max].
inline PairSource log_uniform_pairs(const Domain& d, const Box& box, std::uint64_t seed, double d_min = 1e-4,
                                    double d_max = 1.0) {
  if (!(d_min > 0.0 && d_max >= d_min)) throw InvalidParameter("pair sampler: need 0 < d_min <= d_max");
  PairSampler s{box, d_max, seed};
  return [s, d, d_min](std::size_t i) { return s.sample(d, i, d_min); };
}

/// Pairs placed on the edges of a polar lattice (so never on a particle of a
/// centred lattice). Half of the pairs share an edge radius and are separated
/// by an angle log-uniform in [1e-4, pi]; the others join two edges at most
/// `max_hop` rings apart at nearby angles.
inline PairSource ring_edge_pairs(const Point& center, std::vector<double> edges, std::uint64_t seed,
                                  int max_hop = 2) {
  if (edges.size() < 3) throw InvalidParameter("ring pair sampler: need at least three edges");
  if (max_hop < 1) throw InvalidParameter("ring pair sampler: max_hop must be >= 1");
  return [center, edges = std::move(edges), seed, max_hop](std::size_t i) {
    Rng rng(seed, i);
    const std::size_t k = edges.size();
    // skip the origin edge
    auto pick = [&](double u) { return 1 + std::min<std::size_t>(k - 2, static_cast<std::size_t>(u * (k - 1))); };
    const std::size_t a = pick(rng.uniform());
    const double th = rng.uniform(0.0, kTwoPi);
    const Point x = center + Vec2{std::cos(th), std::sin(th)} * edges[a];
    if (rng.uniform() < 0.5) {
      const double dth = rng.log_uniform(1e-4, kPi);
      return std::pair{x, center + Vec2{std::cos(th + dth), std::sin(th + dth)} * edges[a]};
    }
    const int hop = 1 + static_cast<int>(rng.uniform() * max_hop);
    const long b = std::clamp<long>(static_cast<long>(a) + (rng.uniform() < 0.5 ? -hop : hop), 1,
                                    static_cast<long>(k) - 1);
    const double th2 = th + rng.uniform(-1e-2, 1e-2);
    const std::size_t bb = static_cast<std::size_t>(b) == a ? (a + 1 < k ? a + 1 : a - 1) : static_cast<std::size_t>(b);
    return std::pair{x, center + Vec2{std::cos(th2), std::sin(th2)} * edges[bb]};
  };
}

enum class BoundKind { Holder, PhiTheta, Ell, Lipschitz };

inline std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::Holder: return "holder";
    case BoundKind::PhiTheta: return "phi_theta";
    case BoundKind::Ell: return "ell";
    case BoundKind::Lipschitz: return "lipschitz";
  }
  return "unknown";
}

struct ModulusSample {
  double distance;
  double dv;
  double bound;
  double quotient;
};

struct ModulusReport {
  BoundKind bound_kind = BoundKind::Lipschitz;
  double p = 0.0;         // Holder exponent parameter
  std::string theta;      // growth function, phi_theta only
  std::size_t pairs_sampled = 0;
  std::vector<ModulusSample> samples;
  double empirical_constant = 0.0;
};

/// max over sampled pairs of |v(x) - v(y)| / bound(d(x, y)). Pairs with
/// coincident points are skipped.
template <class Bound>
ModulusReport modulus_report(const VelocityField& v, const PairSource& pairs, std::size_t n, BoundKind kind,
                             const Bound& bound) {
  ModulusReport rep;
  rep.bound_kind = kind;
  rep.pairs_sampled = n;
  std::vector<ModulusSample> s(n);
  std::vector<char> keep(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const auto [x, y] = pairs(i);
    const double d = v.domain().distance(x, y);
    if (!(d > 0.0)) return;
    const double dv = norm(v.difference(x, y));
    const double b = bound(d);
    s[i] = {d, dv, b, dv / b};
    keep[i] = 1;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    rep.samples.push_back(s[i]);
    rep.empirical_constant = std::max(rep.empirical_constant, s[i].quotient);
  }
  return rep;
}

/// Quotients against p d^(1 - 2/p).
inline ModulusReport holder_modulus_report(const VelocityField& v, double p, const PairSource& pairs, std::size_t n) {
  if (!(p > 2.0) || std::isinf(p)) throw InvalidParameter("holder_modulus_report: p must lie in (2, inf)");
  auto rep = modulus_report(v, pairs, n, BoundKind::Holder,
                            [p](double d) { return p * std::pow(d, 1.0 - 2.0 / p); });
  rep.p = p;
  return rep;
}

inline ModulusReport phi_theta_modulus_report(const VelocityField& v, const GrowthFunction& theta,
                                              const PairSource& pairs, std::size_t n) {
  auto rep = modulus_report(v, pairs, n, BoundKind::PhiTheta, [&](double d) { return phi_theta(theta, d); });
  rep.theta = theta.name();
  return rep;
}

inline ModulusReport ell_modulus_report(const VelocityField& v, const PairSource& pairs, std::size_t n) {
  return modulus_report(v, pairs, n, BoundKind::Ell, [](double d) { return ell(d); });
}

inline ModulusReport lipschitz_report(const VelocityField& v, const PairSource& pairs, std::size_t n) {
  return modulus_report(v, pairs, n, BoundKind::Lipschitz, [](double d) { return d; });
}

}  // namespace yudo
