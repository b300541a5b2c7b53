#pragma once

// Test-only reference computations. Kept independent of the library code
// paths they check.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dgd/common.hpp"

namespace oracle {

using dgd::Vec2;

inline double shoelace(const std::vector<Vec2>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % p.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

inline double turn(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Andrew's monotone chain.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  if (pts.size() < 3) return pts;
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && turn(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

inline bool proper_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = turn(a, b, c), d2 = turn(a, b, d), d3 = turn(c, d, a), d4 = turn(c, d, b);
  const double eps = 1e-15;
  return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
         ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

inline bool strictly_inside_triangle(const Vec2& p, const std::vector<Vec2>& t) {
  const double eps = 1e-13;
  const double s = turn(t[0], t[1], t[2]) > 0 ? 1.0 : -1.0;
  return s * turn(t[0], t[1], p) > eps && s * turn(t[1], t[2], p) > eps &&
         s * turn(t[2], t[0], p) > eps;
}

/// Interiors of two triangles intersect (segment-intersection oracle).
inline bool triangles_overlap(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (proper_cross(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3])) return true;
  for (int i = 0; i < 3; ++i) {
    if (strictly_inside_triangle(a[i], b) || strictly_inside_triangle(b[i], a)) return true;
  }
  const Vec2 ca = (a[0] + a[1] + a[2]) / 3.0;
  const Vec2 cb = (b[0] + b[1] + b[2]) / 3.0;
  return strictly_inside_triangle(ca, b) || strictly_inside_triangle(cb, a);
}

/// Random star-shaped (hence simple) CCW polygon with n vertices.
inline std::vector<Vec2> random_star_polygon(std::mt19937_64& rng, int n) {
  // jittered angles keep every angular gap below pi, so the origin is in the kernel
  std::uniform_real_distribution<double> jitter(0.0, 0.4);
  std::uniform_real_distribution<double> rad(0.2, 1.0);
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * (i + jitter(rng)) / n;
    const double r = rad(rng);
    p.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return p;
}

/// Nearest point on the boundary of a polygon by brute force over edges and vertices.
inline Vec2 nearest_on_boundary(const std::vector<Vec2>& poly, const Vec2& q) {
  Vec2 best = poly[0];
  double bd = 1e300;
  auto consider = [&](const Vec2& c) {
    const double d = std::hypot(c.x - q.x, c.y - q.y);
    if (d < bd) {
      bd = d;
      best = c;
    }
  };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    consider(poly[i]);
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    // dense sampling plus the analytic foot point
    const Vec2 ab = b - a;
    const double t = ((q.x - a.x) * ab.x + (q.y - a.y) * ab.y) / (ab.x * ab.x + ab.y * ab.y);
    if (t > 0 && t < 1) consider(a + ab * t);
  }
  return best;
}

}  // namespace oracle
