#include "dgd/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>

#include "dgd/detail/splice.hpp"

namespace dgd {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDisconnectedFreeSpace: return "DisconnectedFreeSpace";
    case ErrorKind::kEmptyFreeSpace: return "EmptyFreeSpace";
    case ErrorKind::kNonSimplePolygon: return "NonSimplePolygon";
    case ErrorKind::kNotAdjacent: return "NotAdjacent";
    case ErrorKind::kNoFreeCells: return "NoFreeCells";
    case ErrorKind::kUnsolvable: return "Unsolvable";
    case ErrorKind::kUnknownVertex: return "UnknownVertex";
    case ErrorKind::kUncoveredWaypoint: return "UncoveredWaypoint";
    case ErrorKind::kInconsistentChain: return "InconsistentChain";
    case ErrorKind::kDivergedTraining: return "DivergedTraining";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kRepairFailed: return "RepairFailed";
    case ErrorKind::kPlacementFailed: return "PlacementFailed";
    case ErrorKind::kDegenerateInstance: return "DegenerateInstance";
    case ErrorKind::kTooShort: return "TooShort";
    case ErrorKind::kBadWindow: return "BadWindow";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kInvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

}  // namespace dgd

namespace dgd::geometry {

double signed_area(std::span<const Vec2> pts) {
  const std::size_t n = pts.size();
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) a += cross(pts[i], pts[(i + 1) % n]);
  return 0.5 * a;
}

Vec2 centroid(const Polygon& p) {
  const std::size_t n = p.size();
  double a = 0.0;
  Vec2 c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % n];
    const double w = cross(u, v);
    a += w;
    c += (u + v) * w;
  }
  if (std::abs(a) < 1e-300) {
    Vec2 mean;
    for (const auto& v : p.vertices) mean += v;
    return n ? mean / double(n) : mean;
  }
  return c / (3.0 * a);
}

Box bounding_box(std::span<const Vec2> pts) {
  Box b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
        {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const auto& p : pts) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
  }
  return b;
}

void make_ccw(Polygon& p) {
  if (signed_area(p) < 0.0) std::reverse(p.vertices.begin(), p.vertices.end());
}

Polygon cleanup(const Polygon& p, double tol) {
  std::vector<Vec2> v = p.vertices;
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() >= 3; ++i) {
      const std::size_t n = v.size();
      const Vec2& a = v[(i + n - 1) % n];
      const Vec2& b = v[i];
      const Vec2& c = v[(i + 1) % n];
      const double ac = distance(a, c);
      const bool repeated = distance(a, b) <= tol;
      const bool collinear = ac > 0.0 && std::abs(orient(a, b, c)) <= tol * ac;
      if (repeated || collinear || ac == 0.0) {
        v.erase(v.begin() + long(i));
        changed = true;
        --i;
      }
    }
  }
  return Polygon{std::move(v)};
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = orient(a, b, c);
  const double d2 = orient(a, b, d);
  const double d3 = orient(c, d, a);
  const double d4 = orient(c, d, b);
  const double tol = 1e-12 * norm(b - a) * norm(d - c);  // near-collinear signs are rounding noise
  return ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol));
}

namespace {

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = orient(a, b, c);
  const double d2 = orient(a, b, d);
  const double d3 = orient(c, d, a);
  const double d4 = orient(c, d, b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(c, a, b)) return true;
  if (d2 == 0 && on_segment(d, a, b)) return true;
  if (d3 == 0 && on_segment(a, c, d)) return true;
  if (d4 == 0 && on_segment(b, c, d)) return true;
  return false;
}

Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

bool is_weakly_simple(const Polygon& p) {
  const std::size_t n = p.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_cross(a, b, p[j], p[(j + 1) % n])) return false;
    }
  }
  return true;
}

double distance_to_boundary(const Polygon& p, const Vec2& q) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, distance(q, closest_on_segment(q, p[i], p[(i + 1) % n])));
  return best;
}

bool point_in_polygon(const Polygon& p, const Vec2& q, double tol) {
  const std::size_t n = p.size();
  if (n < 3) return false;
  if (distance_to_boundary(p, q) <= tol) return true;
  int winding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    if (a.y <= q.y) {
      if (b.y > q.y && orient(a, b, q) > 0) ++winding;
    } else if (b.y <= q.y && orient(a, b, q) < 0) {
      --winding;
    }
  }
  return winding != 0;
}

Polygon polygonize(const Disk& d, double margin, int segments) {
  const double r = (d.radius + margin) / std::cos(std::numbers::pi / segments);
  Polygon p;
  p.vertices.reserve(std::size_t(segments));
  for (int k = 0; k < segments; ++k) {
    const double th = 2.0 * std::numbers::pi * (double(k) + 0.5) / segments;
    p.vertices.push_back(d.center + Vec2{std::cos(th), std::sin(th)} * r);
  }
  return p;
}

bool inside_obstacle(const Obstacle& o, const Vec2& q, double tol) {
  if (const auto* d = std::get_if<Disk>(&o)) return distance(q, d->center) < d->radius - tol;
  const auto& poly = std::get<Polygon>(o);
  return point_in_polygon(poly, q) && distance_to_boundary(poly, q) > tol;
}

double distance_to_obstacle(const Obstacle& o, const Vec2& q) {
  if (const auto* d = std::get_if<Disk>(&o))
    return std::max(0.0, distance(q, d->center) - d->radius);
  const auto& poly = std::get<Polygon>(o);
  if (point_in_polygon(poly, q)) return 0.0;
  return distance_to_boundary(poly, q);
}

namespace {

bool left(const Vec2& a, const Vec2& b, const Vec2& c) { return orient(a, b, c) > 0; }
bool left_on(const Vec2& a, const Vec2& b, const Vec2& c) { return orient(a, b, c) >= 0; }

// Is the direction a -> b inside the interior angle at a (interior on the left)?
bool in_cone(const Vec2& prev, const Vec2& a, const Vec2& next, const Vec2& b) {
  if (left_on(a, next, prev)) return left(a, b, prev) && left(b, a, next);
  return !(left_on(a, b, next) && left_on(b, a, prev));
}

bool bridge_blocked(const Vec2& m, const Vec2& v, const std::vector<Vec2>& ring) {
  const std::size_t n = ring.size();
  const Vec2 mv = v - m;
  const double len = norm(mv);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    if (segments_cross(m, v, a, b)) return true;
    // a vertex lying on the open bridge segment blocks it as well
    if (a != m && a != v) {
      const double t = dot(a - m, mv) / (len * len);
      if (t > 0.0 && t < 1.0 && std::abs(cross(mv, a - m)) / len < 1e-9) return true;
    }
  }
  return false;
}

}  // namespace

Polygon remove_holes(const PolygonWithHoles& region) {
  Polygon outer = cleanup(region.outer);
  make_ccw(outer);
  std::vector<Polygon> holes;
  for (const auto& h : region.holes) {
    Polygon c = cleanup(h);
    if (c.size() < 3) continue;
    make_ccw(c);
    std::reverse(c.vertices.begin(), c.vertices.end());  // clockwise
    holes.push_back(std::move(c));
  }
  auto max_x = [](const Polygon& p) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& v : p.vertices) m = std::max(m, v.x);
    return m;
  };
  std::stable_sort(holes.begin(), holes.end(),
                   [&](const Polygon& a, const Polygon& b) { return max_x(a) > max_x(b); });

  std::vector<Vec2> ring = outer.vertices;
  for (std::size_t h = 0; h < holes.size(); ++h) {
    const auto& hole = holes[h].vertices;
    const std::size_t hn = hole.size();
    std::size_t mi = 0;
    for (std::size_t k = 1; k < hn; ++k) {
      if (hole[k].x > hole[mi].x || (hole[k].x == hole[mi].x && hole[k].y > hole[mi].y)) mi = k;
    }
    const Vec2 m = hole[mi];
    const Vec2 m_prev = hole[(mi + hn - 1) % hn];
    const Vec2 m_next = hole[(mi + 1) % hn];

    // hole touching the ring at m: splice it in there, leaving a pinch
    std::optional<std::size_t> touch;
    for (std::size_t k = 0; k < ring.size() && !touch; ++k) {
      const Vec2& a = ring[k];
      const Vec2& b = ring[(k + 1) % ring.size()];
      if (distance(a, m) <= 1e-12) {
        touch = k;
      } else if (distance(b, m) > 1e-12) {
        const Vec2 ab = b - a;
        const double t = dot(m - a, ab) / dot(ab, ab);
        if (t > 0.0 && t < 1.0 && std::abs(cross(ab, m - a)) / norm(ab) <= 1e-12) {
          ring.insert(ring.begin() + long(k) + 1, m);
          touch = k + 1;
        }
      }
    }
    if (touch) {
      std::vector<Vec2> next(ring.begin(), ring.begin() + long(*touch) + 1);
      for (std::size_t k = 1; k < hn; ++k) next.push_back(hole[(mi + k) % hn]);
      next.push_back(ring[*touch]);
      next.insert(next.end(), ring.begin() + long(*touch) + 1, ring.end());
      ring = std::move(next);
      continue;
    }

    std::vector<std::size_t> order(ring.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return distance(ring[a], m) < distance(ring[b], m);
    });

    std::optional<std::size_t> chosen;
    for (std::size_t k : order) {
      const Vec2 v = ring[k];
      if (v == m) continue;
      const std::size_t n = ring.size();
      if (!in_cone(ring[(k + n - 1) % n], v, ring[(k + 1) % n], m)) continue;
      if (!in_cone(m_prev, m, m_next, v)) continue;
      if (bridge_blocked(m, v, ring)) continue;
      bool blocked = false;
      for (std::size_t g = h; g < holes.size() && !blocked; ++g)
        blocked = bridge_blocked(m, v, holes[g].vertices);
      if (blocked) continue;
      chosen = k;
      break;
    }
    if (!chosen) throw NonSimplePolygon("no visible bridge vertex for a hole");

    std::vector<Vec2> next;
    next.reserve(ring.size() + hn + 2);
    next.insert(next.end(), ring.begin(), ring.begin() + long(*chosen) + 1);
    for (std::size_t k = 0; k <= hn; ++k) next.push_back(hole[(mi + k) % hn]);
    next.push_back(ring[*chosen]);
    next.insert(next.end(), ring.begin() + long(*chosen) + 1, ring.end());
    ring = std::move(next);
  }
  return Polygon{std::move(ring)};
}

Polygon remove_holes(const Workspace& ws) {
  FreeSpace fs(ws, 0.0);
  if (fs.components().empty()) throw EmptyFreeSpace("workspace has no free space");
  if (fs.components().size() > 1)
    throw DisconnectedFreeSpace(std::to_string(fs.components().size()) + " free-space components");
  return remove_holes(fs.components().front());
}

// ---------------------------------------------------------------------------
// Triangulation by ear clipping over a doubly linked vertex ring.

namespace {

bool in_triangle_closed(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0;
}

}  // namespace

Triangulation triangulate(const Polygon& input) {
  const std::size_t n = input.size();
  if (n < 3) throw NonSimplePolygon("fewer than 3 vertices");
  if (!is_weakly_simple(input)) throw NonSimplePolygon("edges cross");

  const bool flipped = signed_area(input) < 0.0;
  auto vid = [&](std::size_t k) { return flipped ? n - 1 - k : k; };  // working -> input index
  std::vector<Vec2> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = input[vid(k)];

  const Box bb = bounding_box(v);
  const double scale = std::max(bb.width(), bb.height());
  const double area_eps = 1e-14 * scale * scale;

  std::vector<std::size_t> prev(n), next(n);
  for (std::size_t k = 0; k < n; ++k) {
    prev[k] = (k + n - 1) % n;
    next[k] = (k + 1) % n;
  }
  std::vector<char> reflex(n, 0);
  auto refresh = [&](std::size_t k) { reflex[k] = orient(v[prev[k]], v[k], v[next[k]]) <= area_eps; };
  for (std::size_t k = 0; k < n; ++k) refresh(k);

  auto is_ear = [&](std::size_t b) {
    const std::size_t a = prev[b];
    const std::size_t c = next[b];
    if (orient(v[a], v[b], v[c]) <= area_eps) return false;
    for (std::size_t p = next[c]; p != a; p = next[p]) {
      const Vec2& q = v[p];
      if (q == v[a] || q == v[b] || q == v[c]) {
        // pinch: another copy of a corner whose edges run into the ear
        const std::size_t x = q == v[a] ? a : q == v[b] ? b : c;
        const Vec2 fwd = v[x == a ? b : x == b ? c : a] - q;
        const Vec2 back = v[x == a ? c : x == b ? a : b] - q;
        for (std::size_t nb : {prev[p], next[p]}) {
          const Vec2 d = v[nb] - q;
          if (cross(fwd, d) > 0 && cross(d, back) > 0) return false;
        }
        continue;
      }
      if (!reflex[p]) continue;
      if (in_triangle_closed(q, v[a], v[b], v[c])) return false;
    }
    return true;
  };

  Triangulation out;
  out.triangles.reserve(n - 2);
  out.corners.reserve(n - 2);
  double left_area = 2.0 * std::abs(signed_area(v));  // twice the area still to cover
  auto emit = [&](std::size_t a, std::size_t b, std::size_t c) {
    left_area -= orient(v[a], v[b], v[c]);
    out.triangles.push_back(Polygon{{v[a], v[b], v[c]}});
    out.corners.push_back({int(vid(a)), int(vid(b)), int(vid(c))});
  };

  std::size_t remaining = n;
  std::size_t cur = 0;
  while (remaining > 3) {
    if (left_area <= 1e-12 * scale * scale) break;  // only pinched slivers remain
    std::size_t scanned = 0;
    bool clipped = false;
    while (scanned < remaining) {
      if (is_ear(cur)) {
        const std::size_t a = prev[cur];
        const std::size_t c = next[cur];
        emit(a, cur, c);
        next[a] = c;
        prev[c] = a;
        refresh(a);
        refresh(c);
        --remaining;
        cur = c;
        clipped = true;
        break;
      }
      cur = next[cur];
      ++scanned;
    }
    if (!clipped) {
      // no proper ear left: drop a zero-area corner (collinear vertex or spike)
      for (std::size_t k = 0; k < remaining && !clipped; ++k, cur = next[cur]) {
        if (std::abs(orient(v[prev[cur]], v[cur], v[next[cur]])) > area_eps) continue;
        const std::size_t a = prev[cur];
        const std::size_t c = next[cur];
        next[a] = c;
        prev[c] = a;
        refresh(a);
        refresh(c);
        --remaining;
        cur = c;
        clipped = true;
      }
    }
    if (!clipped) throw NonSimplePolygon("ear clipping stalled (degenerate polygon)");
  }
  if (remaining == 3 && orient(v[prev[cur]], v[cur], v[next[cur]]) > area_eps) emit(prev[cur], cur, next[cur]);  // collinear leftovers cover nothing

  // interior diagonals: edges between non-consecutive input indices
  auto boundary = [&](int a, int b) {
    const int d = std::abs(a - b);
    return d == 1 || d == int(n) - 1;
  };
  struct Half {
    int tri;
    int a, b;
  };
  std::vector<Half> halves;
  for (std::size_t t = 0; t < out.corners.size(); ++t) {
    const auto& c = out.corners[t];
    for (int e = 0; e < 3; ++e) {
      const int a = c[e];
      const int b = c[(e + 1) % 3];
      if (!boundary(a, b)) halves.push_back({int(t), a, b});
    }
  }
  std::sort(halves.begin(), halves.end(), [](const Half& x, const Half& y) {
    const auto kx = std::make_pair(std::min(x.a, x.b), std::max(x.a, x.b));
    const auto ky = std::make_pair(std::min(y.a, y.b), std::max(y.a, y.b));
    return kx != ky ? kx < ky : x.tri < y.tri;
  });
  for (std::size_t k = 0; k + 1 < halves.size(); ++k) {
    const Half& x = halves[k];
    const Half& y = halves[k + 1];
    if (x.a == y.b && x.b == y.a) {
      out.diagonals.push_back({x.a, x.b, x.tri, y.tri});
      ++k;
    }
  }
  return out;
}

bool is_convex(const Polygon& polygon, double tol) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  if (signed_area(polygon) <= 0.0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = polygon[(i + n - 1) % n];
    const Vec2& b = polygon[i];
    const Vec2& c = polygon[(i + 1) % n];
    if (cross(b - a, c - b) < -tol) return false;
  }
  return true;
}

Polygon merge_regions(const Polygon& r1, const Polygon& r2, const std::array<Vec2, 2>& shared_edge) {
  auto eq = [](const Vec2& a, const Vec2& b) { return distance(a, b) <= 1e-12; };
  const std::size_t n1 = r1.size();
  for (std::size_t i = 0; i < n1; ++i) {
    const Vec2& a = r1[i];
    const Vec2& b = r1[(i + 1) % n1];
    const bool match = (eq(a, shared_edge[0]) && eq(b, shared_edge[1])) ||
                       (eq(a, shared_edge[1]) && eq(b, shared_edge[0]));
    if (!match) continue;
    if (auto merged = detail::splice_cycles(r1.vertices, r2.vertices, i, eq))
      return Polygon{std::move(*merged)};
  }
  throw NotAdjacent("edge is not shared by both regions");
}

bool contains(const Polygon& region, const Vec2& point, double tol) {
  const std::size_t n = region.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = region[i];
    const Vec2 e = region[(i + 1) % n] - a;
    const double len = norm(e);
    if (len == 0.0) continue;
    if (cross(e, point - a) / len < -tol) return false;
  }
  return true;
}

double signed_outside_distance(const Polygon& region, const Vec2& point) {
  const std::size_t n = region.size();
  double min_inside = std::numeric_limits<double>::infinity();
  bool inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = region[i];
    const Vec2 e = region[(i + 1) % n] - a;
    const double len = norm(e);
    if (len == 0.0) continue;
    const double sd = cross(e, point - a) / len;
    if (sd < 0.0) inside = false;
    min_inside = std::min(min_inside, sd);
  }
  if (inside) return -min_inside;
  return distance_to_boundary(region, point);
}

Vec2 project_to_convex(const Vec2& point, const Polygon& region) {
  if (contains(region, point, 0.0)) return point;
  const std::size_t n = region.size();
  Vec2 best = region[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 c = closest_on_segment(point, region[i], region[(i + 1) % n]);
    const double d = distance(point, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::optional<std::array<double, 2>> clip_segment(const Polygon& region, const Vec2& a, const Vec2& b,
                                                  double tol) {
  double lo = 0.0;
  double hi = 1.0;
  const std::size_t n = region.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = region[i];
    const Vec2 e = region[(i + 1) % n] - p;
    const double len = norm(e);
    if (len == 0.0) continue;
    // signed distance along the segment: f(s) = f0 + s * (f1 - f0) >= -tol
    const double f0 = cross(e, a - p) / len + tol;
    const double f1 = cross(e, b - p) / len + tol;
    const double df = f1 - f0;
    if (df == 0.0) {
      if (f0 < 0.0) return std::nullopt;
      continue;
    }
    const double s = -f0 / df;
    if (df > 0.0)
      lo = std::max(lo, s);
    else
      hi = std::min(hi, s);
    if (lo > hi) return std::nullopt;
  }
  return std::array<double, 2>{lo, hi};
}

double convex_intersection_area(const Polygon& a, const Polygon& b) {
  std::vector<Vec2> out = a.vertices;
  const std::size_t m = b.size();
  for (std::size_t i = 0; i < m && !out.empty(); ++i) {
    const Vec2& p = b[i];
    const Vec2& q = b[(i + 1) % m];
    std::vector<Vec2> in = std::move(out);
    out.clear();
    const std::size_t k = in.size();
    for (std::size_t j = 0; j < k; ++j) {
      const Vec2& s = in[j];
      const Vec2& e = in[(j + 1) % k];
      const double ds = orient(p, q, s);
      const double de = orient(p, q, e);
      if (ds >= 0) out.push_back(s);
      if ((ds >= 0) != (de >= 0)) {
        const double t = ds / (ds - de);
        out.push_back(s + (e - s) * t);
      }
    }
  }
  if (out.size() < 3) return 0.0;
  return std::max(0.0, signed_area(out));
}

}  // namespace dgd::geometry
