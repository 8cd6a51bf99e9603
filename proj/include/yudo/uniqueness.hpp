#pragma once

// Flow separation between two runs started from the same particles,
// averaged against the measure mu = (|omega0| + eta) dx, and its comparison
// with the Osgood envelope E' = C phi_Theta(E).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/growth.hpp"
#include "yudo/numeric.hpp"
#include "yudo/solver.hpp"

namespace yudo {

/// Strictly positive integrable weight eta added to |omega0| so that mu
/// charges every particle.
class ComparisonWeight {
 public:
  enum class Kind { Gaussian, UniformBox };

  static ComparisonWeight gaussian(double amplitude, const Point& center, double width) {
    if (!(amplitude > 0.0) || !(width > 0.0)) throw InvalidParameter("eta: amplitude and width must be > 0");
    ComparisonWeight w;
    w.kind_ = Kind::Gaussian;
    w.amplitude_ = amplitude;
    w.center_ = center;
    w.width_ = width;
    return w;
  }

  static ComparisonWeight uniform_box(double amplitude, const Box& box) {
    if (!(amplitude > 0.0) || box.empty()) throw InvalidParameter("eta: amplitude must be > 0 and box nonempty");
    ComparisonWeight w;
    w.kind_ = Kind::UniformBox;
    w.amplitude_ = amplitude;
    w.box_ = box;
    return w;
  }

  /// Gaussian of amplitude 1e-3 max|omega0| (1e-3 for a zero field) centred
  /// on the support's bounding box, width its half-diagonal (at least 1).
  static ComparisonWeight default_for(const ParticleField& omega0) {
    double m = 0.0;
    for (double v : omega0.values) m = std::max(m, std::abs(v));
    const double amp = 1e-3 * (m > 0.0 ? m : 1.0);
    if (omega0.empty()) return gaussian(amp, {0.0, 0.0}, 1.0);
    const Box b = bounding_box(omega0.positions);
    const Point c{0.5 * (b.lo1 + b.hi1), 0.5 * (b.lo2 + b.hi2)};
    return gaussian(amp, c, std::max(1.0, 0.5 * std::hypot(b.width(), b.height())));
  }

  Kind kind() const { return kind_; }
  double amplitude() const { return amplitude_; }

  double eta(const Domain& d, const Point& x) const {
    if (kind_ == Kind::Gaussian) {
      const double r2 = norm2(d.displacement(x, center_));
      return amplitude_ * std::exp(-r2 / (width_ * width_));
    }
    return box_.contains(x) ? amplitude_ : 0.0;
  }

  /// mu_i = w_i (|omega0_i| + eta(x_i)); throws unless every mu_i > 0.
  std::vector<double> mu(const ParticleField& omega0) const {
    std::vector<double> out(omega0.size());
    for (std::size_t i = 0; i < omega0.size(); ++i) {
      const double e = eta(omega0.domain, omega0.positions[i]);
      if (!(e > 0.0)) throw InvalidParameter("eta must be positive on the particle support");
      out[i] = omega0.weights[i] * (std::abs(omega0.values[i]) + e);
    }
    return out;
  }

  std::string describe() const {
    if (kind_ == Kind::Gaussian)
      return "gaussian(amplitude=" + fmt(amplitude_) + ", center=(" + fmt(center_.x1) + "," + fmt(center_.x2) +
             "), width=" + fmt(width_) + ")";
    return "uniform_box(amplitude=" + fmt(amplitude_) + ", box=[" + fmt(box_.lo1) + "," + fmt(box_.hi1) + "]x[" +
           fmt(box_.lo2) + "," + fmt(box_.hi2) + "])";
  }

 private:
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  Kind kind_ = Kind::Gaussian;
  double amplitude_ = 1e-3;
  Point center_{};
  double width_ = 1.0;
  Box box_{};
};

struct FlowDistanceReport {
  std::vector<double> times;
  std::vector<double> D;
  std::vector<double> envelope;
  double fitted_C = 0.0;
  std::string C_source = "fitted";
  double delta0 = 0.0;
  std::string theta;
  std::string eta;
  /// Numeric concavity of phi_Theta; the comparison argument assumes it.
  bool phi_concave = true;
  bool verdict = false;
};

namespace detail {

inline bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace detail

/// D(t_k) = sum_i mu_i d(X_i, X~_i) / sum_i mu_i at every snapshot time.
inline FlowDistanceReport flow_distance(const Trajectory& a, const Trajectory& b, const ComparisonWeight& weight) {
  if (a.snapshots.empty() || b.snapshots.empty()) throw IncompatibleRuns("flow distance: empty trajectory");
  if (a.snapshots.size() != b.snapshots.size())
    throw IncompatibleRuns("flow distance: runs have different numbers of snapshots");
  const ParticleField& a0 = a.snapshots.front().field;
  const ParticleField& b0 = b.snapshots.front().field;
  if (a0.domain.kind() != b0.domain.kind() || a0.domain.side() != b0.domain.side())
    throw IncompatibleRuns("flow distance: runs live on different domains");
  if (a0.positions.size() != b0.positions.size())
    throw IncompatibleRuns("flow distance: runs have different particle counts");
  for (std::size_t i = 0; i < a0.size(); ++i)
    if (!(a0.positions[i] == b0.positions[i]) || a0.weights[i] != b0.weights[i] || a0.values[i] != b0.values[i])
      throw IncompatibleRuns("flow distance: runs start from different particle sets");
  for (std::size_t k = 0; k < a.snapshots.size(); ++k)
    if (!detail::same_time(a.snapshots[k].field.time_stamp, b.snapshots[k].field.time_stamp))
      throw IncompatibleRuns("flow distance: snapshot times differ");

  FlowDistanceReport rep;
  rep.eta = weight.describe();
  const auto mu = weight.mu(a0);
  CompensatedSum total;
  for (double m : mu) total.add(m);
  const double mass = total.value();
  rep.times = a.times();
  rep.D.assign(rep.times.size(), 0.0);
  parallel_for(rep.times.size(), [&](std::size_t k) {
    const auto& pa = a.snapshots[k].field.positions;
    const auto& pb = b.snapshots[k].field.positions;
    CompensatedSum s;
    for (std::size_t i = 0; i < pa.size(); ++i) s.add(mu[i] * a0.domain.distance(pa[i], pb[i]));
    rep.D[k] = mass > 0.0 ? s.value() / mass : 0.0;
  });
  return rep;
}

/// Envelope from delta0 = max(D(0), 1e-12) with C either supplied or fitted
/// as the least constant with D_{k+1} <= D_k + C dt phi(max(D_k, delta0)) on
/// the series. Verdict: D <= envelope at every time, up to the 1e-9 relative
/// tolerance of the envelope inversion. A series that is identically zero
/// gets the zero envelope.
inline FlowDistanceReport envelope_verdict(FlowDistanceReport rep, const GrowthFunction& theta,
                                           std::optional<double> supplied_C = std::nullopt) {
  if (rep.times.size() != rep.D.size() || rep.times.empty())
    throw InvalidParameter("envelope_verdict: times and D must be nonempty and aligned");
  rep.theta = theta.name();
  rep.phi_concave = phi_is_concave_on_grid(theta);
  rep.C_source = supplied_C ? "supplied" : "fitted";
  const bool all_zero = std::all_of(rep.D.begin(), rep.D.end(), [](double d) { return d == 0.0; });
  rep.delta0 = all_zero ? 0.0 : std::max(rep.D.front(), 1e-12);

  if (supplied_C) {
    if (!(*supplied_C > 0.0)) throw InvalidParameter("envelope_verdict: supplied C must be > 0");
    rep.fitted_C = *supplied_C;
  } else {
    double c = 0.0;
    for (std::size_t k = 0; k + 1 < rep.D.size(); ++k) {
      const double dt = rep.times[k + 1] - rep.times[k];
      const double rise = rep.D[k + 1] - rep.D[k];
      if (rise > 0.0) c = std::max(c, rise / (dt * phi_theta(theta, std::max(rep.D[k], rep.delta0))));
    }
    rep.fitted_C = c;
  }

  std::vector<double> t0(rep.times.size());
  for (std::size_t k = 0; k < t0.size(); ++k) t0[k] = rep.times[k] - rep.times.front();
  if (rep.delta0 == 0.0 || rep.fitted_C == 0.0)
    rep.envelope.assign(t0.size(), rep.delta0);
  else
    rep.envelope = osgood_envelope(theta, rep.fitted_C, rep.delta0, t0);

  rep.verdict = true;
  for (std::size_t k = 0; k < rep.D.size(); ++k)
    if (rep.D[k] > rep.envelope[k] * (1.0 + 1e-9)) rep.verdict = false;
  return rep;
}

}  // namespace yudo
