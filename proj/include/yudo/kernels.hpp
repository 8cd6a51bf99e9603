#pragma once

// Biot-Savart-type kernels k(x, y) on the plane and the torus, their
// Gaussian-mollified versions, tabulated user kernels, and sampling
// estimators for the structural constants C1 and C2.
//
//   |k(x,y)| <= C1 / d(x,y)
//   |k(x,z) - k(y,z)| <= C2 d(x,y) / (d(x,z) d(y,z))

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/numeric.hpp"

namespace yudo {

/// Truncated Fourier representation of the torus Biot-Savart kernel,
///   K(z) = (1/L^2) sum_{kappa != 0, |m_i| <= M} kappa^perp g(kappa) sin(kappa . z) / |kappa|^2,
/// kappa = 2 pi m / L, g(kappa) = exp(-|kappa|^2 delta^2 / 4) the Fourier
/// symbol of the Gaussian mollifier. Modes are stored over a half-plane with
/// the conjugate partner folded into the coefficient.
class TorusModes {
 public:
  struct Mode {
    int m1;
    int m2;
    Vec2 coeff;  // 2 kappa^perp g / (|kappa|^2 L^2)
  };

  TorusModes(double side, int cutoff, double blob_delta) : side_(side), cutoff_(cutoff) {
    const double k0 = kTwoPi / side;
    for (int m1 = 0; m1 <= cutoff; ++m1) {
      for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
        if (m1 == 0 && m2 <= 0) continue;
        const Vec2 kappa{k0 * m1, k0 * m2};
        const double k2 = norm2(kappa);
        const double g = std::exp(-k2 * blob_delta * blob_delta / 4.0);
        modes_.push_back({m1, m2, perp(kappa) * (2.0 * g / (k2 * side * side))});
      }
    }
  }

  double side() const { return side_; }
  int cutoff() const { return cutoff_; }
  const std::vector<Mode>& modes() const { return modes_; }

  /// cos/sin of m * (2 pi / L) * s for m = 0..M.
  void trig_table(double s, std::vector<double>& c, std::vector<double>& sn) const {
    c.resize(cutoff_ + 1);
    sn.resize(cutoff_ + 1);
    const double k0 = kTwoPi / side_;
    for (int m = 0; m <= cutoff_; ++m) {
      c[m] = std::cos(k0 * m * s);
      sn[m] = std::sin(k0 * m * s);
    }
  }

  /// K(z).
  Vec2 eval(const Vec2& z) const {
    std::vector<double> c1, s1, c2, s2;
    trig_table(z.x1, c1, s1);
    trig_table(z.x2, c2, s2);
    Vec2 acc{};
    for (const auto& md : modes_) {
      const double sb = md.m2 >= 0 ? s2[md.m2] : -s2[-md.m2];
      const double cb = c2[std::abs(md.m2)];
      const double s = s1[md.m1] * cb + c1[md.m1] * sb;
      acc += md.coeff * s;
    }
    return acc;
  }

  /// K(a) - K(b) with e = a - b, via sin A - sin B = 2 cos((A+B)/2) sin((A-B)/2).
  Vec2 difference(const Vec2& mid, const Vec2& half_e) const {
    std::vector<double> cm1, sm1, cm2, sm2, ce1, se1, ce2, se2;
    trig_table(mid.x1, cm1, sm1);
    trig_table(mid.x2, cm2, sm2);
    trig_table(half_e.x1, ce1, se1);
    trig_table(half_e.x2, ce2, se2);
    Vec2 acc{};
    for (const auto& md : modes_) {
      const int a2 = std::abs(md.m2);
      const double sg = md.m2 >= 0 ? 1.0 : -1.0;
      const double cos_mid = cm1[md.m1] * cm2[a2] - sm1[md.m1] * sg * sm2[a2];
      const double sin_half = se1[md.m1] * ce2[a2] + ce1[md.m1] * sg * se2[a2];
      acc += md.coeff * (2.0 * cos_mid * sin_half);
    }
    return acc;
  }

 private:
  double side_;
  int cutoff_;
  std::vector<Mode> modes_;
};

/// Kernel sampled on, for each source node y, a rectilinear grid of targets x.
/// Evaluation picks the nearest tabulated y and interpolates bilinearly in x
/// (clamped to the node's grid).
class TabulatedKernel {
 public:
  struct Sample {
    Point x;
    Point y;
    Vec2 k;
  };

  static TabulatedKernel from_samples(const std::vector<Sample>& samples) {
    if (samples.empty()) throw InvalidInput("tabulated kernel: no samples");
    std::map<std::pair<double, double>, std::vector<const Sample*>> by_y;
    for (const auto& s : samples) {
      if (!is_finite(s.x) || !is_finite(s.y) || !is_finite(s.k))
        throw InvalidInput("tabulated kernel: non-finite sample");
      by_y[{s.y.x1, s.y.x2}].push_back(&s);
    }
    TabulatedKernel tk;
    for (auto& [key, group] : by_y) {
      Node node;
      node.y = {key.first, key.second};
      for (const auto* s : group) {
        node.xs1.push_back(s->x.x1);
        node.xs2.push_back(s->x.x2);
      }
      auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      };
      uniq(node.xs1);
      uniq(node.xs2);
      if (node.xs1.size() * node.xs2.size() != group.size())
        throw InvalidInput("tabulated kernel: targets for each source node must form a full rectilinear grid");
      node.k.resize(group.size());
      for (const auto* s : group) {
        const auto i = std::lower_bound(node.xs1.begin(), node.xs1.end(), s->x.x1) - node.xs1.begin();
        const auto j = std::lower_bound(node.xs2.begin(), node.xs2.end(), s->x.x2) - node.xs2.begin();
        node.k[j * node.xs1.size() + i] = s->k;
      }
      tk.nodes_.push_back(std::move(node));
    }
    return tk;
  }

  /// CSV with header `x1,x2,y1,y2,k1,k2`.
  static TabulatedKernel load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("tabulated kernel: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("tabulated kernel: empty file " + path);
    auto strip = [](std::string s) {
      s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
      return s;
    };
    if (strip(line) != "x1,x2,y1,y2,k1,k2")
      throw InvalidInput("tabulated kernel: expected header x1,x2,y1,y2,k1,k2");
    std::vector<Sample> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (strip(line).empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      double v[6];
      for (int c = 0; c < 6; ++c) {
        if (!std::getline(ss, cell, ','))
          throw InvalidInput("tabulated kernel: line " + std::to_string(lineno) + " has fewer than 6 columns");
        try {
          v[c] = std::stod(cell);
        } catch (const std::exception&) {
          throw InvalidInput("tabulated kernel: bad number on line " + std::to_string(lineno));
        }
      }
      samples.push_back({{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}});
    }
    return from_samples(samples);
  }

  Vec2 eval(const Point& x, const Point& y) const {
    const Node* best = &nodes_.front();
    double bd = norm2(y - best->y);
    for (const auto& n : nodes_) {
      const double d = norm2(y - n.y);
      if (d < bd) {
        bd = d;
        best = &n;
      }
    }
    return best->interpolate(x);
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Point y;
    std::vector<double> xs1, xs2;
    std::vector<Vec2> k;  // row-major in x2

    Vec2 interpolate(const Point& x) const {
      auto locate = [](const std::vector<double>& xs, double v, std::size_t& i, double& t) {
        if (xs.size() == 1 || v <= xs.front()) {
          i = 0;
          t = 0.0;
          return;
        }
        if (v >= xs.back()) {
          i = xs.size() - 2;
          t = 1.0;
          return;
        }
        i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), v) - xs.begin()) - 1;
        t = (v - xs[i]) / (xs[i + 1] - xs[i]);
      };
      std::size_t i, j;
      double t, u;
      locate(xs1, x.x1, i, t);
      locate(xs2, x.x2, j, u);
      const std::size_t n1 = xs1.size();
      const std::size_t i1 = std::min(i + 1, n1 - 1);
      const std::size_t j1 = std::min(j + 1, xs2.size() - 1);
      const Vec2 k00 = k[j * n1 + i], k10 = k[j * n1 + i1];
      const Vec2 k01 = k[j1 * n1 + i], k11 = k[j1 * n1 + i1];
      return (1 - u) * ((1 - t) * k00 + t * k10) + u * ((1 - t) * k01 + t * k11);
    }
  };

  std::vector<Node> nodes_;
};

class KernelSpec {
 public:
  enum class Kind { BiotSavartPlane, BiotSavartTorus, UserTabulated };

  static KernelSpec biot_savart_plane(double blob_delta = 0.0) {
    KernelSpec k(Domain::plane(), Kind::BiotSavartPlane);
    k.set_blob_delta(blob_delta);
    return k;
  }

  static KernelSpec biot_savart_torus(double side, int fourier_cutoff = 64, double blob_delta = 0.0) {
    if (fourier_cutoff < 1) throw InvalidParameter("torus kernel: fourier cutoff must be >= 1");
    KernelSpec k(Domain::torus(side), Kind::BiotSavartTorus);
    k.cutoff_ = fourier_cutoff;
    k.set_blob_delta(blob_delta);
    return k;
  }

  static KernelSpec tabulated(std::shared_ptr<const TabulatedKernel> table, Domain domain = Domain::plane()) {
    if (!table) throw InvalidParameter("tabulated kernel: null table");
    KernelSpec k(domain, Kind::UserTabulated);
    k.table_ = std::move(table);
    return k;
  }

  const Domain& domain() const { return domain_; }
  Kind kind() const { return kind_; }
  int fourier_cutoff() const { return cutoff_; }
  double blob_delta() const { return delta_; }
  const TorusModes* torus_modes() const { return modes_.get(); }
  const TabulatedKernel* table() const { return table_.get(); }
  /// Biot-Savart kinds generate divergence-free velocities.
  bool divergence_free() const { return kind_ != Kind::UserTabulated; }

  /// Copy with a different mollification length (0 = singular).
  KernelSpec with_blob(double delta) const {
    KernelSpec k = *this;
    k.set_blob_delta(delta);
    return k;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::BiotSavartPlane: return "biot_savart_plane";
      case Kind::BiotSavartTorus: return "biot_savart_torus";
      case Kind::UserTabulated: return "user_tabulated";
    }
    return "unknown";
  }

 private:
  KernelSpec(Domain d, Kind k) : domain_(d), kind_(k) {}

  void set_blob_delta(double delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidParameter("kernel: blob_delta must be >= 0");
    delta_ = delta;
    if (kind_ == Kind::BiotSavartTorus)
      modes_ = std::make_shared<const TorusModes>(domain_.side(), cutoff_, delta_);
  }

  Domain domain_;
  Kind kind_;
  int cutoff_ = 64;
  double delta_ = 0.0;
  std::shared_ptr<const TorusModes> modes_;
  std::shared_ptr<const TabulatedKernel> table_;
};

namespace detail {

inline constexpr double kBlobCutoff = 40.0;  // exp(-40) is below half an ulp of 1

// (1/2pi) a^perp / |a|^2 times the blob factor 1 - exp(-|a|^2/delta^2).
inline Vec2 plane_kernel(const Vec2& a, double inv_delta2, bool singular_ok_at_zero) {
  const double r2 = norm2(a);
  if (r2 == 0.0) {
    if (!singular_ok_at_zero) throw SingularityError("singular Biot-Savart kernel evaluated at coincident points");
    return {};
  }
  double f = 1.0 / (kTwoPi * r2);
  if (inv_delta2 > 0.0) {
    const double s = r2 * inv_delta2;
    if (s < kBlobCutoff) f *= -std::expm1(-s);
  }
  return perp(a) * f;
}

// k(b + e) - k(b) for the (mollified) plane kernel without cancellation.
inline Vec2 plane_kernel_difference(const Vec2& a, const Vec2& b, const Vec2& e, double inv_delta2) {
  const double a2 = norm2(a), b2 = norm2(b);
  if (a2 == 0.0 || b2 == 0.0) {
    const bool blob = inv_delta2 > 0.0;
    return plane_kernel(a, inv_delta2, blob) - plane_kernel(b, inv_delta2, blob);
  }
  const double cross = 2.0 * dot(b, e) + norm2(e);  // |a|^2 - |b|^2
  // [e^perp |b|^2 - b^perp cross] / (2 pi |a|^2 |b|^2), arranged so tiny radii do not underflow
  const Vec2 d0 = (perp(e) - perp(b) * (cross / b2)) * (1.0 / (kTwoPi * a2));
  if (inv_delta2 == 0.0) return d0;
  const double fa = a2 * inv_delta2 < kBlobCutoff ? -std::expm1(-a2 * inv_delta2) : 1.0;
  const double eb = b2 * inv_delta2 < kBlobCutoff ? std::exp(-b2 * inv_delta2) : 0.0;
  // f(a) - f(b) = exp(-|b|^2/d^2) (1 - exp(-(|a|^2 - |b|^2)/d^2))
  const double df = -eb * std::expm1(-cross * inv_delta2);
  return d0 * fa + perp(b) * (df / (kTwoPi * b2));
}

}  // namespace detail

/// k(x, y): velocity at x induced by a unit point vortex at y.
inline Vec2 eval_kernel(const KernelSpec& k, const Point& x, const Point& y) {
  switch (k.kind()) {
    case KernelSpec::Kind::BiotSavartPlane: {
      const double d = k.blob_delta();
      return detail::plane_kernel(x - y, d > 0.0 ? 1.0 / (d * d) : 0.0, d > 0.0);
    }
    case KernelSpec::Kind::BiotSavartTorus: {
      const Vec2 z = k.domain().displacement(x, y);
      if (k.blob_delta() == 0.0 && norm2(z) == 0.0)
        throw SingularityError("torus kernel evaluated at coincident points");
      return k.torus_modes()->eval(z);
    }
    case KernelSpec::Kind::UserTabulated:
      return k.table()->eval(x, y);
  }
  return {};
}

/// k(x, z) - k(y, z), evaluated without cancellation for the Biot-Savart kinds.
inline Vec2 kernel_difference(const KernelSpec& k, const Point& x, const Point& y, const Point& z) {
  switch (k.kind()) {
    case KernelSpec::Kind::BiotSavartPlane: {
      const double d = k.blob_delta();
      return detail::plane_kernel_difference(x - z, y - z, x - y, d > 0.0 ? 1.0 / (d * d) : 0.0);
    }
    case KernelSpec::Kind::BiotSavartTorus: {
      const Domain& dom = k.domain();
      const Vec2 a = dom.displacement(x, z), b = dom.displacement(y, z);
      if (k.blob_delta() == 0.0 && (norm2(a) == 0.0 || norm2(b) == 0.0))
        throw SingularityError("torus kernel evaluated at coincident points");
      const Vec2 e = dom.displacement(x, y);
      return k.torus_modes()->difference(b + e * 0.5, e * 0.5);
    }
    case KernelSpec::Kind::UserTabulated:
      return k.table()->eval(x, z) - k.table()->eval(y, z);
  }
  return {};
}

/// Source of random point pairs: x uniform in `box`, y = x + d u with u a
/// random unit vector and d log-uniform in [r_min, r_max]. Sample i depends
/// only on (seed, i).
struct PairSampler {
  Box box{-1.0, -1.0, 1.0, 1.0};
  double r_max = 1.0;
  std::uint64_t seed = 0;

  std::pair<Point, Point> sample(const Domain& d, std::size_t i, double r_min) const {
    Rng rng(seed, i);
    const Point x{rng.uniform(box.lo1, box.hi1), rng.uniform(box.lo2, box.hi2)};
    const double dist = rng.log_uniform(r_min, std::max(r_min, r_max));
    const Point y = x + rng.unit_vector() * dist;
    return {d.reduce(x), d.reduce(y)};
  }
};

/// Source of random triples (x, y, z) with d(x,z) = rho log-uniform in
/// [1.5 r_min, r_max] and d(x,y) = h log-uniform in [1e-4 rho, rho/3], so that
/// d(x,y) <= min(d(x,z), d(y,z)) / 2 and both separations from z exceed r_min.
struct TripleSampler {
  Box box{-1.0, -1.0, 1.0, 1.0};
  double r_max = 1.0;
  std::uint64_t seed = 0;

  struct Triple {
    Point x, y, z;
  };

  Triple sample(const Domain& d, std::size_t i, double r_min) const {
    Rng rng(seed, i);
    const Point z{rng.uniform(box.lo1, box.hi1), rng.uniform(box.lo2, box.hi2)};
    const double rho = rng.log_uniform(1.5 * r_min, std::max(1.5 * r_min, r_max));
    const Point x = z + rng.unit_vector() * rho;
    const double h = rng.log_uniform(1e-4 * rho, rho / 3.0);
    const Point y = x + rng.unit_vector() * h;
    return {d.reduce(x), d.reduce(y), d.reduce(z)};
  }
};

namespace detail {

inline void check_sampler_range(const KernelSpec& k, double r_max, double r_min) {
  if (!(r_min > 0.0)) throw InvalidParameter("kernel estimator: r_min must be > 0");
  if (k.domain().is_torus() && r_max > 0.375 * k.domain().side())
    throw InvalidParameter("kernel estimator: on the torus r_max must not exceed 3L/8");
}

}  // namespace detail

/// max over n sampled pairs of d(x,y) |k(x,y)|: a lower bound for C1.
inline double estimate_C1(const KernelSpec& k, const PairSampler& sampler, std::size_t n, double r_min) {
  if (n < 1) throw InvalidParameter("estimate_C1: need at least one sample");
  detail::check_sampler_range(k, sampler.r_max, r_min);
  std::vector<double> vals(n);
  parallel_for(n, [&](std::size_t i) {
    const auto [x, y] = sampler.sample(k.domain(), i, r_min);
    vals[i] = k.domain().distance(x, y) * norm(eval_kernel(k, x, y));
  });
  return *std::max_element(vals.begin(), vals.end());
}

/// max over n sampled triples of |k(x,z) - k(y,z)| d(x,z) d(y,z) / d(x,y):
/// a lower bound for C2 over the regime d(x,y) <= min(d(x,z), d(y,z)) / 2.
inline double estimate_C2(const KernelSpec& k, const TripleSampler& sampler, std::size_t n, double r_min) {
  if (n < 1) throw InvalidParameter("estimate_C2: need at least one sample");
  detail::check_sampler_range(k, sampler.r_max * 4.0 / 3.0, r_min);
  std::vector<double> vals(n);
  const Domain& d = k.domain();
  parallel_for(n, [&](std::size_t i) {
    const auto t = sampler.sample(d, i, r_min);
    const double dxy = d.distance(t.x, t.y);
    vals[i] = norm(kernel_difference(k, t.x, t.y, t.z)) * d.distance(t.x, t.z) * d.distance(t.y, t.z) / dxy;
  });
  return *std::max_element(vals.begin(), vals.end());
}

}  // namespace yudo
