#include <algorithm>

#define BOOST_GEOMETRY_NO_ROBUSTNESS
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "dgd/geometry.hpp"

namespace dgd::geometry {

namespace {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

BPolygon to_boost(const Polygon& p) {
  BPolygon out;
  for (const auto& v : p.vertices) bg::append(out.outer(), BPoint(v.x, v.y));
  if (!p.vertices.empty()) bg::append(out.outer(), BPoint(p[0].x, p[0].y));
  bg::correct(out);
  return out;
}

Polygon from_ring(const BPolygon::ring_type& ring) {
  Polygon p;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) p.vertices.push_back({ring[i].x(), ring[i].y()});
  return cleanup(p, 1e-10);
}

BMulti inflate(const Obstacle& o, double clearance) {
  BMulti out;
  if (const auto* d = std::get_if<Disk>(&o)) {
    out.push_back(to_boost(polygonize(*d, clearance)));
    return out;
  }
  const BPolygon poly = to_boost(std::get<Polygon>(o));
  if (clearance <= 0.0) {
    out.push_back(poly);
    return out;
  }
  bg::strategy::buffer::distance_symmetric<double> dist(clearance);
  bg::strategy::buffer::side_straight side;
  bg::strategy::buffer::join_miter join(10.0);
  bg::strategy::buffer::end_flat end;
  bg::strategy::buffer::point_square point;
  bg::buffer(poly, out, dist, side, join, end, point);
  return out;
}

}  // namespace

FreeSpace::FreeSpace(const Workspace& ws, double clearance) : workspace_(ws), clearance_(clearance) {
  BMulti blocked;
  for (const auto& o : ws.obstacles) {
    BMulti shape = inflate(o, clearance);
    BMulti merged;
    bg::union_(blocked, shape, merged);
    blocked = std::move(merged);
  }

  const Vec2 lo = ws.bounds.min + Vec2{clearance, clearance};
  const Vec2 hi = ws.bounds.max - Vec2{clearance, clearance};
  if (!(lo.x < hi.x && lo.y < hi.y)) return;
  BPolygon box = to_boost(Polygon{{lo, {hi.x, lo.y}, hi, {lo.x, hi.y}}});

  BMulti free;
  bg::difference(box, blocked, free);

  for (const auto& bp : free) {
    PolygonWithHoles comp;
    comp.outer = from_ring(bp.outer());
    if (comp.outer.size() < 3 || area(comp.outer) < 1e-10) continue;
    make_ccw(comp.outer);
    for (const auto& inner : bp.inners()) {
      Polygon h = from_ring(inner);
      if (h.size() < 3 || area(h) < 1e-12) continue;
      make_ccw(h);
      std::reverse(h.vertices.begin(), h.vertices.end());
      comp.holes.push_back(std::move(h));
    }
    components_.push_back(std::move(comp));
  }
  // deterministic order: by lowest-left outer vertex
  auto key = [](const PolygonWithHoles& c) {
    const Box b = bounding_box(c.outer.vertices);
    return std::make_pair(b.min.x, b.min.y);
  };
  std::stable_sort(components_.begin(), components_.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
}

int FreeSpace::component_of(const Vec2& p) const {
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const auto& comp = components_[c];
    if (!point_in_polygon(comp.outer, p, 1e-12)) continue;
    bool in_hole = false;
    for (const auto& h : comp.holes) {
      if (point_in_polygon(h, p) && distance_to_boundary(h, p) > 1e-12) {
        in_hole = true;
        break;
      }
    }
    if (!in_hole) return int(c);
  }
  return -1;
}

bool FreeSpace::contains(const Vec2& p, double tol) const {
  for (const auto& comp : components_) {
    if (!point_in_polygon(comp.outer, p, tol)) continue;
    bool in_hole = false;
    for (const auto& h : comp.holes) {
      if (point_in_polygon(h, p) && distance_to_boundary(h, p) > tol) {
        in_hole = true;
        break;
      }
    }
    if (!in_hole) return true;
  }
  return false;
}

bool FreeSpace::segment_free(const Vec2& a, const Vec2& b) const {
  if (!contains(a) || !contains(b)) return false;
  std::vector<double> cuts{0.0, 1.0};
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return true;
  auto add_ring = [&](const Polygon& ring) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& c = ring[i];
      const Vec2& d = ring[(i + 1) % n];
      if (!segments_intersect(a, b, c, d)) continue;
      const Vec2 cd = d - c;
      const double den = cross(ab, cd);
      if (std::abs(den) > 1e-18) {
        cuts.push_back(std::clamp(cross(c - a, cd) / den, 0.0, 1.0));
      } else {
        cuts.push_back(std::clamp(dot(c - a, ab) / len2, 0.0, 1.0));
        cuts.push_back(std::clamp(dot(d - a, ab) / len2, 0.0, 1.0));
      }
    }
  };
  for (const auto& comp : components_) {
    add_ring(comp.outer);
    for (const auto& h : comp.holes) add_ring(h);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-12) continue;
    if (!contains(a + ab * (0.5 * (cuts[i] + cuts[i + 1])))) return false;
  }
  return true;
}

}  // namespace dgd::geometry
