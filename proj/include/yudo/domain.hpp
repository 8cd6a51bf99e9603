#pragma once

// Spatial domains: the plane and the flat torus [0, L)^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "yudo/error.hpp"

namespace yudo {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x1 += o.x1;
    x2 += o.x2;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x1 -= o.x1;
    x2 -= o.x2;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x1 *= s;
    x2 *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x1, -a.x2}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

using Point = Vec2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x1 * b.x1 + a.x2 * b.x2; }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::hypot(a.x1, a.x2); }
/// Counter-clockwise rotation by a right angle: (x1, x2) -> (-x2, x1).
constexpr Vec2 perp(const Vec2& a) { return {-a.x2, a.x1}; }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x1) && std::isfinite(a.x2); }

/// Axis-aligned closed rectangle [lo1, hi1] x [lo2, hi2].
struct Box {
  double lo1 = 0.0;
  double lo2 = 0.0;
  double hi1 = 0.0;
  double hi2 = 0.0;

  double width() const { return hi1 - lo1; }
  double height() const { return hi2 - lo2; }
  bool empty() const { return !(hi1 >= lo1 && hi2 >= lo2); }
  bool contains(const Point& p) const {
    return p.x1 >= lo1 && p.x1 <= hi1 && p.x2 >= lo2 && p.x2 <= hi2;
  }
  Box padded(double r) const { return {lo1 - r, lo2 - r, hi1 + r, hi2 + r}; }
};

/// Smallest box containing all points; an empty list yields an empty box.
inline Box bounding_box(const std::vector<Point>& pts) {
  if (pts.empty()) return {1.0, 1.0, 0.0, 0.0};
  Box b{pts[0].x1, pts[0].x2, pts[0].x1, pts[0].x2};
  for (const auto& p : pts) {
    b.lo1 = std::min(b.lo1, p.x1);
    b.lo2 = std::min(b.lo2, p.x2);
    b.hi1 = std::max(b.hi1, p.x1);
    b.hi2 = std::max(b.hi2, p.x2);
  }
  return b;
}

class Domain {
 public:
  enum class Kind { Plane, Torus };

  static Domain plane() { return Domain(Kind::Plane, 0.0); }

  static Domain torus(double side_length) {
    if (!(side_length > 0.0) || !std::isfinite(side_length))
      throw InvalidParameter("torus side length must be positive and finite");
    return Domain(Kind::Torus, side_length);
  }

  Kind kind() const { return kind_; }
  bool is_torus() const { return kind_ == Kind::Torus; }
  /// Side length of the fundamental cell; zero for the plane.
  double side() const { return side_; }

  /// Fundamental cell of the torus; for the plane, the caller supplies a box.
  Box cell() const { return {0.0, 0.0, side_, side_}; }

  /// Canonical representative: identity on the plane, [0, L)^2 on the torus.
  Point reduce(const Point& p) const {
    if (kind_ == Kind::Plane) return p;
    return {wrap(p.x1), wrap(p.x2)};
  }

  /// Shortest displacement a - b (nearest periodic image on the torus).
  Vec2 displacement(const Point& a, const Point& b) const {
    Vec2 d = a - b;
    if (kind_ == Kind::Torus) {
      d.x1 -= side_ * std::nearbyint(d.x1 / side_);
      d.x2 -= side_ * std::nearbyint(d.x2 / side_);
    }
    return d;
  }

  double distance(const Point& a, const Point& b) const { return norm(displacement(a, b)); }

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  Domain(Kind k, double side) : kind_(k), side_(side) {}

  double wrap(double x) const {
    double r = x - side_ * std::floor(x / side_);
    if (r >= side_ || r < 0.0) r = 0.0;
    return r;
  }

  Kind kind_;
  double side_;
};

inline double distance(const Domain& d, const Point& a, const Point& b) { return d.distance(a, b); }

/// Grid of ball centres covering `bbox` with step at most `spacing`, row-major
/// in (x2, x1). On the torus the grid is periodic over the fundamental cell.
inline std::vector<Point> ball_center_grid(const Domain& d, const Box& bbox, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw InvalidParameter("ball_center_grid: spacing must be positive");
  if (bbox.empty()) throw InvalidParameter("ball_center_grid: empty bounding box");
  std::vector<Point> out;
  if (d.is_torus()) {
    const double L = d.side();
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(L / spacing)));
    const double h = L / static_cast<double>(n);
    out.reserve(n * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) out.push_back({h * double(i), h * double(j)});
    return out;
  }
  auto axis = [spacing](double lo, double hi) {
    const double w = hi - lo;
    const auto n = static_cast<std::size_t>(std::ceil(w / spacing)) + 1;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i)
      xs[i] = n == 1 ? lo : lo + w * double(i) / double(n - 1);
    return xs;
  };
  const auto xs = axis(bbox.lo1, bbox.hi1);
  const auto ys = axis(bbox.lo2, bbox.hi2);
  out.reserve(xs.size() * ys.size());
  for (double y : ys)
    for (double x : xs) out.push_back({x, y});
  return out;
}

/// Uniform bucket grid for fixed-radius neighbour queries.
class CellList {
 public:
  CellList(const Domain& d, const std::vector<Point>& pts, double cell_size) : domain_(d) {
    if (!(cell_size > 0.0)) throw InvalidParameter("CellList: cell size must be positive");
    if (d.is_torus()) {
      origin_ = {0.0, 0.0};
      n1_ = n2_ = static_cast<std::size_t>(std::max(1.0, std::floor(d.side() / cell_size)));
      h1_ = h2_ = d.side() / double(n1_);
    } else {
      const Box b = pts.empty() ? Box{0, 0, 0, 0} : bounding_box(pts);
      origin_ = {b.lo1, b.lo2};
      n1_ = static_cast<std::size_t>(b.width() / cell_size) + 1;
      n2_ = static_cast<std::size_t>(b.height() / cell_size) + 1;
      h1_ = h2_ = cell_size;
    }
    start_.assign(n1_ * n2_ + 1, 0);
    std::vector<std::size_t> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of[i] = cell_index(pts[i]);
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < n1_ * n2_; ++c) start_[c + 1] += start_[c];
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[cell_of[i]]++] = i;
  }

  /// Calls f(i) for every stored point index i in the cells overlapping the
  /// square of half-width r around c; callers filter by exact distance.
  template <class F>
  void for_each_candidate(const Point& c, double r, F&& f) const {
    auto range = [](double lo, double hi, double origin, double h, std::size_t n, bool periodic,
                    long& a, long& b) {
      a = static_cast<long>(std::floor((lo - origin) / h));
      b = static_cast<long>(std::floor((hi - origin) / h));
      if (periodic) {
        if (b - a + 1 >= static_cast<long>(n)) {
          a = 0;
          b = static_cast<long>(n) - 1;
        }
      } else {
        a = std::max(a, 0L);
        b = std::min(b, static_cast<long>(n) - 1);
      }
    };
    const bool periodic = domain_.is_torus();
    long a1, b1, a2, b2;
    range(c.x1 - r, c.x1 + r, origin_.x1, h1_, n1_, periodic, a1, b1);
    range(c.x2 - r, c.x2 + r, origin_.x2, h2_, n2_, periodic, a2, b2);
    for (long j = a2; j <= b2; ++j) {
      const auto jj = wrap_index(j, n2_);
      for (long i = a1; i <= b1; ++i) {
        const auto ii = wrap_index(i, n1_);
        const std::size_t cell = jj * n1_ + ii;
        for (std::size_t k = start_[cell]; k < start_[cell + 1]; ++k) f(items_[k]);
      }
    }
  }

 private:
  static std::size_t wrap_index(long i, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  }

  std::size_t cell_index(const Point& p) const {
    auto clampi = [](double v, std::size_t n) {
      const long i = static_cast<long>(std::floor(v));
      return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(n) - 1));
    };
    const std::size_t i = clampi((p.x1 - origin_.x1) / h1_, n1_);
    const std::size_t j = clampi((p.x2 - origin_.x2) / h2_, n2_);
    return j * n1_ + i;
  }

  Domain domain_;
  Point origin_{};
  std::size_t n1_ = 1, n2_ = 1;
  double h1_ = 1.0, h2_ = 1.0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

}  // namespace yudo
