#pragma once

#include <array>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dgd/common.hpp"

namespace dgd::geometry {

inline constexpr double kConvexTol = 1e-9;
inline constexpr double kContainTol = 1e-9;
inline constexpr int kDiskSegments = 16;

/// Simple polygon, counter-clockwise.
struct Polygon {
  std::vector<Vec2> vertices;

  std::size_t size() const { return vertices.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices[i]; }
  Vec2& operator[](std::size_t i) { return vertices[i]; }
  bool operator==(const Polygon&) const = default;
};

struct Disk {
  Vec2 center;
  double radius = 0.0;
  bool operator==(const Disk&) const = default;
};

using Obstacle = std::variant<Polygon, Disk>;

struct Box {
  Vec2 min;
  Vec2 max;
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  bool operator==(const Box&) const = default;
};

struct Workspace {
  Box bounds;
  std::vector<Obstacle> obstacles;
};

struct PolygonWithHoles {
  Polygon outer;              // counter-clockwise
  std::vector<Polygon> holes; // clockwise
};

/// Interior edge shared by two triangles; `a`, `b` index the input polygon.
struct Diagonal {
  int a = 0;
  int b = 0;
  int left = 0;   // triangle holding the directed edge a -> b
  int right = 0;  // triangle holding b -> a
};

struct Triangulation {
  std::vector<Polygon> triangles;
  std::vector<std::array<int, 3>> corners;  // CCW vertex indices per triangle
  std::vector<Diagonal> diagonals;
};

// --- basic measures -------------------------------------------------------

double signed_area(std::span<const Vec2> pts);
inline double signed_area(const Polygon& p) { return signed_area(p.vertices); }
inline double area(const Polygon& p) { return std::abs(signed_area(p)); }
Vec2 centroid(const Polygon& p);
Box bounding_box(std::span<const Vec2> pts);

/// Reverses `p` in place if it is clockwise.
void make_ccw(Polygon& p);

/// Drops repeated and collinear (straight-angle) vertices.
Polygon cleanup(const Polygon& p, double tol = 1e-12);

/// True when the open segments [a,b] and [c,d] cross at a single interior point.
bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// True when segments [a,b] and [c,d] share any point.
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// Closest point to `p` on segment [a,b].
Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b);

/// No pair of edges crosses properly. Collinear overlaps and shared endpoints
/// are tolerated so polygons with doubled bridge edges pass.
bool is_weakly_simple(const Polygon& p);

/// Point-in-polygon (winding number) for any simple polygon; boundary counts
/// as inside when within `tol`.
bool point_in_polygon(const Polygon& p, const Vec2& q, double tol = 0.0);

double distance_to_boundary(const Polygon& p, const Vec2& q);

// --- obstacles ------------------------------------------------------------

/// Regular polygon circumscribing the disk inflated by `margin`.
Polygon polygonize(const Disk& d, double margin = 0.0, int segments = kDiskSegments);

/// Strictly inside the obstacle by more than `tol`.
bool inside_obstacle(const Obstacle& o, const Vec2& q, double tol = 1e-9);

/// Euclidean distance from `q` to the obstacle (0 inside).
double distance_to_obstacle(const Obstacle& o, const Vec2& q);

// --- operations -----------------------------------------------------------

/// Joins every hole to the outer boundary with a doubled bridge edge.
Polygon remove_holes(const PolygonWithHoles& region);

/// Free space of `ws` as one simple polygon. Throws DisconnectedFreeSpace or
/// EmptyFreeSpace.
Polygon remove_holes(const Workspace& ws);

Triangulation triangulate(const Polygon& polygon);

bool is_convex(const Polygon& polygon, double tol = kConvexTol);

/// Union of two interior-disjoint polygons sharing `shared_edge` (in either
/// direction). Collinear continuations of the shared edge are absorbed too.
Polygon merge_regions(const Polygon& r1, const Polygon& r2,
                      const std::array<Vec2, 2>& shared_edge);

/// Convex region membership, closed with tolerance `tol`.
bool contains(const Polygon& region, const Vec2& point, double tol = kContainTol);

/// Signed distance of `point` outside the convex region (negative inside).
double signed_outside_distance(const Polygon& region, const Vec2& point);

/// Euclidean projection onto a convex region.
Vec2 project_to_convex(const Vec2& point, const Polygon& region);

/// Parameter interval of the segment a + s(b - a), s in [0,1], inside a
/// convex region, or nullopt when the segment misses it.
std::optional<std::array<double, 2>> clip_segment(const Polygon& region, const Vec2& a,
                                                  const Vec2& b, double tol = kContainTol);

/// Area of the intersection of two convex polygons.
double convex_intersection_area(const Polygon& a, const Polygon& b);

// --- free space -----------------------------------------------------------

/// Workspace bounds minus obstacles inflated by `clearance`, as polygonal
/// components. Disks are replaced by circumscribed polygons and polygon
/// obstacles are offset with mitred corners, so every point of the result
/// keeps at least `clearance` from every real obstacle.
class FreeSpace {
 public:
  FreeSpace(const Workspace& ws, double clearance);

  const std::vector<PolygonWithHoles>& components() const { return components_; }
  double clearance() const { return clearance_; }
  const Workspace& workspace() const { return workspace_; }

  /// Closed membership with tolerance `tol`.
  bool contains(const Vec2& p, double tol = 1e-12) const;

  /// Whole segment stays in free space.
  bool segment_free(const Vec2& a, const Vec2& b) const;

  /// Component index holding `p`, or -1.
  int component_of(const Vec2& p) const;

 private:
  Workspace workspace_;
  double clearance_;
  std::vector<PolygonWithHoles> components_;
};

}  // namespace dgd::geometry
