#pragma once

// Growth functions Theta indexing the Yudovich scale, the moduli of
// continuity they induce, and the Osgood machinery built on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "yudo/error.hpp"

namespace yudo {

/// Junction radius of the phi_Theta modulus, e^-2.
inline const double kPhiJunction = std::exp(-2.0);

/// A non-decreasing Theta: [1, inf) -> (0, inf), rescaled at construction so
/// that Theta(3) >= 1.
///
/// Families:
///  - Constant(c):        Theta(p) = c
///  - Power(alpha):       Theta(p) = p^alpha
///  - IteratedLog(m):     Theta(p) = L(p) L(L(p)) ... (m factors), L(x) = 1 + log x.
///    This is the iterated-logarithm family log p * log log p * ... with each
///    factor shifted so it is positive and concave on all of [1, inf); it agrees
///    with the unshifted product up to lower-order terms as p -> inf.
///  - Log1p:              Theta(p) = log(e + p)
class GrowthFunction {
 public:
  enum class Family { Constant, Power, IteratedLog, Log1p };

  static GrowthFunction constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("constant growth: c must be > 0");
    return GrowthFunction(Family::Constant, c);
  }
  static GrowthFunction power(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw InvalidParameter("power growth: alpha must be > 0");
    return GrowthFunction(Family::Power, alpha);
  }
  static GrowthFunction iterated_log(int m) {
    if (m < 1) throw InvalidParameter("iterated-log growth: m must be >= 1");
    return GrowthFunction(Family::IteratedLog, static_cast<double>(m));
  }
  static GrowthFunction log1p() { return GrowthFunction(Family::Log1p, 0.0); }

  Family family() const { return family_; }
  /// c, alpha or m depending on the family (unused for Log1p).
  double parameter() const { return param_; }
  /// Multiplier applied to the raw family to enforce Theta(3) >= 1.
  double scale() const { return scale_; }

  /// Unscaled family value.
  double raw(double p) const {
    switch (family_) {
      case Family::Constant:
        return param_;
      case Family::Power:
        return std::pow(p, param_);
      case Family::IteratedLog: {
        double prod = 1.0, x = p;
        for (int k = 0; k < static_cast<int>(param_); ++k) {
          x = 1.0 + std::log(x);
          prod *= x;
        }
        return prod;
      }
      case Family::Log1p:
        return std::log(std::numbers::e + p);
    }
    return 0.0;
  }

  double operator()(double p) const { return scale_ * raw(p); }

  std::string name() const {
    switch (family_) {
      case Family::Constant: return "constant";
      case Family::Power: return "power";
      case Family::IteratedLog: return "iterated_log";
      case Family::Log1p: return "log1p";
    }
    return "unknown";
  }

  friend bool operator==(const GrowthFunction&, const GrowthFunction&) = default;

 private:
  GrowthFunction(Family f, double param) : family_(f), param_(param) {
    scale_ = std::max(1.0, 1.0 / raw(3.0));
  }

  Family family_;
  double param_;
  double scale_ = 1.0;
};

/// Numerical monotonicity check of Theta on a log-spaced p-grid in [1, p_max].
template <class Theta>
bool is_non_decreasing(const Theta& theta, double p_max = 1e12, int points = 1000) {
  double prev = theta(1.0);
  for (int i = 1; i < points; ++i) {
    const double p = std::exp(std::log(p_max) * i / (points - 1));
    const double v = theta(p);
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

/// phi_Theta(r): 0 at 0, r(1 - log r) Theta(1 - log r) on (0, e^-2], and the
/// constant e^-2 * 3 * Theta(3) beyond.
template <class Theta>
double phi_theta(const Theta& theta, double r) {
  if (!(r >= 0.0)) throw InvalidParameter("phi_theta: r must be >= 0");
  if (r == 0.0) return 0.0;
  if (r <= kPhiJunction) {
    const double p = 1.0 - std::log(r);
    return r * p * theta(p);
  }
  return kPhiJunction * 3.0 * theta(3.0);
}

/// Log-Lipschitz modulus: 0 at 0, r(1 - log r) on (0, 1], 1 beyond.
inline double ell(double r) {
  if (!(r >= 0.0)) throw InvalidParameter("ell: r must be >= 0");
  if (r == 0.0) return 0.0;
  if (r <= 1.0) return r * (1.0 - std::log(r));
  return 1.0;
}

/// Log-spaced epsilon grid in [lo, hi], both inside (0, 1/3).
inline std::vector<double> default_eps_grid(int points = 64, double lo = 1e-4,
                                            double hi = 1.0 / 3.0 - 1e-6) {
  if (points < 1) throw InvalidParameter("eps grid needs at least one point");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = hi;
    return g;
  }
  for (int i = 0; i < points; ++i)
    g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1));
  return g;
}

inline void validate_eps_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("epsilon grid must be nonempty");
  for (double e : grid)
    if (!(e > 0.0 && e < 1.0 / 3.0)) throw InvalidParameter("epsilon grid values must lie in (0, 1/3)");
}

/// Grid approximation (from above) of
///   inf_eps (1/eps) Theta(1/eps)          for r < 1,
///   inf_eps (1/eps) Theta(1/eps) r^eps    for r >= 1.
template <class Theta>
double psi_theta(const Theta& theta, double r, const std::vector<double>& eps_grid) {
  validate_eps_grid(eps_grid);
  if (!(r >= 0.0)) throw InvalidParameter("psi_theta: r must be >= 0");
  double best = std::numeric_limits<double>::infinity();
  for (double eps : eps_grid) {
    double v = theta(1.0 / eps) / eps;
    if (r >= 1.0) v *= std::pow(r, eps);
    best = std::min(best, v);
  }
  return best;
}

/// Grid approximation (from above) of
///   inf_eps Theta(1/eps) (1 - log d)^(1 - eps) d^(1 - 2 eps),  d in (0, e^-2].
template <class Theta>
double psi_tilde_theta(const Theta& theta, double d, const std::vector<double>& eps_grid) {
  validate_eps_grid(eps_grid);
  if (!(d > 0.0 && d <= kPhiJunction * (1.0 + 1e-15)))
    throw InvalidParameter("psi_tilde_theta: d must lie in (0, e^-2]");
  const double q = 1.0 - std::log(d);
  const double logd = std::log(d);
  double best = std::numeric_limits<double>::infinity();
  for (double eps : eps_grid) {
    const double v = theta(1.0 / eps) * std::exp((1.0 - eps) * std::log(q) + (1.0 - 2.0 * eps) * logd);
    best = std::min(best, v);
  }
  return best;
}

/// Slope-monotonicity check of phi_Theta on a log grid in [1e-10, r_max]
/// (plus r = 0); returns false if some chord slope increases.
template <class Theta>
bool phi_is_concave_on_grid(const Theta& theta, int points = 1000, double r_max = 1.0) {
  std::vector<double> r(points);
  r[0] = 0.0;
  for (int i = 1; i < points; ++i)
    r[i] = std::exp(std::log(1e-10) + (std::log(r_max) - std::log(1e-10)) * (i - 1) / (points - 2));
  double prev_slope = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < points; ++i) {
    const double s = (phi_theta(theta, r[i + 1]) - phi_theta(theta, r[i])) / (r[i + 1] - r[i]);
    if (s > prev_slope * (1.0 + 1e-9) + 1e-12) return false;
    prev_slope = s;
  }
  return true;
}

/// A modulus of continuity (or comparator function) with its provenance tag.
class Modulus {
 public:
  enum class Kind { PhiTheta, Ell, PsiTheta, PsiTildeTheta };

  static Modulus phi(GrowthFunction theta) { return Modulus(Kind::PhiTheta, theta, {}); }
  static Modulus ell() { return Modulus(Kind::Ell, GrowthFunction::constant(1.0), {}); }
  static Modulus psi(GrowthFunction theta, std::vector<double> grid = default_eps_grid()) {
    validate_eps_grid(grid);
    return Modulus(Kind::PsiTheta, theta, std::move(grid));
  }
  static Modulus psi_tilde(GrowthFunction theta, std::vector<double> grid = default_eps_grid()) {
    validate_eps_grid(grid);
    return Modulus(Kind::PsiTildeTheta, theta, std::move(grid));
  }

  Kind kind() const { return kind_; }
  const GrowthFunction& theta() const { return theta_; }

  std::string tag() const {
    switch (kind_) {
      case Kind::PhiTheta: return "phi_theta";
      case Kind::Ell: return "ell";
      case Kind::PsiTheta: return "psi_theta";
      case Kind::PsiTildeTheta: return "psi_tilde_theta";
    }
    return "unknown";
  }

  double operator()(double r) const {
    switch (kind_) {
      case Kind::PhiTheta: return phi_theta(theta_, r);
      case Kind::Ell: return yudo::ell(r);
      case Kind::PsiTheta: return psi_theta(theta_, r, grid_);
      case Kind::PsiTildeTheta: return psi_tilde_theta(theta_, r, grid_);
    }
    return 0.0;
  }

  /// Radius beyond which the modulus is constant; +inf when it never saturates.
  double saturation() const {
    switch (kind_) {
      case Kind::PhiTheta: return kPhiJunction;
      case Kind::Ell: return 1.0;
      default: return std::numeric_limits<double>::infinity();
    }
  }

 private:
  Modulus(Kind k, GrowthFunction theta, std::vector<double> grid)
      : kind_(k), theta_(theta), grid_(std::move(grid)) {}

  Kind kind_;
  GrowthFunction theta_;
  std::vector<double> grid_;
};

enum class OsgoodVerdict { Diverges, Converges, Inconclusive };

inline std::string to_string(OsgoodVerdict v) {
  switch (v) {
    case OsgoodVerdict::Diverges: return "diverges";
    case OsgoodVerdict::Converges: return "converges";
    case OsgoodVerdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct OsgoodReport {
  OsgoodVerdict verdict = OsgoodVerdict::Inconclusive;
  std::string reason;
  double p_max = 3.0;
  double partial_integral = 0.0;
  /// (p, integral from 3 to p of dp / (p Theta(p))) at p = 3 * 10^k and p_max.
  std::vector<std::pair<double, double>> trace;
};

namespace detail {

// Integral from 3 to p of dp/(p Theta(p)) via s = log p.
template <class Theta>
double osgood_partial(const Theta& theta, double p_lo, double p_hi, double tol) {
  if (p_hi <= p_lo) return 0.0;
  auto f = [&](double s) { return 1.0 / theta(std::exp(s)); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, std::log(p_lo),
                                                                         std::log(p_hi), 20, tol);
}

template <class Theta>
OsgoodReport osgood_trace(const Theta& theta, double p_max, double tol) {
  if (!(p_max >= 3.0)) throw InvalidParameter("osgood: p_max must be >= 3");
  if (!(tol > 0.0)) throw InvalidParameter("osgood: tol must be > 0");
  OsgoodReport rep;
  rep.p_max = p_max;
  double acc = 0.0, p_prev = 3.0;
  rep.trace.emplace_back(3.0, 0.0);
  for (double p = 30.0; p < p_max; p *= 10.0) {
    acc += osgood_partial(theta, p_prev, p, tol);
    rep.trace.emplace_back(p, acc);
    p_prev = p;
  }
  if (p_max > p_prev) {
    acc += osgood_partial(theta, p_prev, p_max, tol);
    rep.trace.emplace_back(p_max, acc);
  }
  rep.partial_integral = acc;
  return rep;
}

}  // namespace detail

/// Osgood classification of a shipped family: divergence of the integral of
/// dp / (p Theta(p)) at infinity. The verdict is analytic per family; the
/// numerical partial integrals are reported alongside.
inline OsgoodReport osgood_diverges(const GrowthFunction& theta, double p_max, double tol = 1e-10) {
  OsgoodReport rep = detail::osgood_trace(theta, p_max, tol);
  switch (theta.family()) {
    case GrowthFunction::Family::Constant:
      rep.verdict = OsgoodVerdict::Diverges;
      rep.reason = "integrand ~ 1/(c p): logarithmic divergence";
      break;
    case GrowthFunction::Family::IteratedLog:
      rep.verdict = OsgoodVerdict::Diverges;
      rep.reason = "integrand ~ 1/(p log p ... log_m p): iterated-log divergence";
      break;
    case GrowthFunction::Family::Log1p:
      rep.verdict = OsgoodVerdict::Diverges;
      rep.reason = "integrand ~ 1/(p log p): log-log divergence";
      break;
    case GrowthFunction::Family::Power:
      rep.verdict = OsgoodVerdict::Converges;
      rep.reason = "integrand = p^(-1-alpha) with alpha > 0: integrable";
      break;
  }
  return rep;
}

/// Arbitrary Theta: no closed-form classification, only the partial integral.
template <class Theta>
OsgoodReport osgood_diverges(const Theta& theta, double p_max, double tol = 1e-10) {
  OsgoodReport rep = detail::osgood_trace(theta, p_max, tol);
  rep.verdict = OsgoodVerdict::Inconclusive;
  rep.reason = "no closed-form comparison for this growth function";
  return rep;
}

namespace detail {

// Osgood integral from delta0 to E of dr / m(r) for E in (delta0, sat], in
// the variable u = -log r.
inline double osgood_integral_log(const Modulus& m, double delta0, double e) {
  if (e <= delta0) return 0.0;
  auto f = [&](double u) {
    const double r = std::exp(-u);
    return r / m(r);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -std::log(e),
                                                                         -std::log(delta0), 12, 1e-12);
}

}  // namespace detail

/// Maximal solution of E' = C m(E), E(0) = delta0, on the time grid, obtained
/// by inverting the Osgood integral. delta0 = 0 gives the zero solution.
inline std::vector<double> osgood_envelope(const Modulus& m, double C, double delta0,
                                           const std::vector<double>& t_grid) {
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidParameter("osgood_envelope: C must be > 0");
  if (!(delta0 >= 0.0) || !std::isfinite(delta0))
    throw InvalidParameter("osgood_envelope: delta0 must be >= 0");
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw InvalidParameter("osgood_envelope: time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw InvalidParameter("osgood_envelope: time grid must increase");

  std::vector<double> out(t_grid.size(), 0.0);
  if (delta0 == 0.0) return out;

  const double sat = m.saturation();
  const double m_sat = std::isfinite(sat) ? m(sat) : 0.0;
  // Part of the Osgood integral spent below the saturation radius.
  const double below = delta0 < sat ? detail::osgood_integral_log(m, delta0, sat)
                                    : 0.0;

  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double target = C * t_grid[k];
    if (target == 0.0) {
      out[k] = delta0;
      continue;
    }
    if (delta0 >= sat) {
      out[k] = delta0 + m_sat * target;
      continue;
    }
    if (std::isfinite(sat) && target >= below) {
      out[k] = sat + m_sat * (target - below);
      continue;
    }
    // Bisection in u = -log E on [u_sat, u_delta0].
    double u_hi = -std::log(delta0);
    double u_lo;
    if (std::isfinite(sat)) {
      u_lo = -std::log(sat);
    } else {
      u_lo = u_hi - 1.0;
      while (detail::osgood_integral_log(m, delta0, std::exp(-u_lo)) < target) u_lo -= 2.0 * (u_hi - u_lo);
    }
    for (int it = 0; it < 200 && (u_hi - u_lo) > 1e-13 * std::max(1.0, std::abs(u_hi)); ++it) {
      const double u_mid = 0.5 * (u_lo + u_hi);
      if (detail::osgood_integral_log(m, delta0, std::exp(-u_mid)) < target)
        u_hi = u_mid;
      else
        u_lo = u_mid;
    }
    out[k] = std::exp(-0.5 * (u_lo + u_hi));
  }
  return out;
}

inline std::vector<double> osgood_envelope(const GrowthFunction& theta, double C, double delta0,
                                           const std::vector<double>& t_grid) {
  return osgood_envelope(Modulus::phi(theta), C, delta0, t_grid);
}

}  // namespace yudo
