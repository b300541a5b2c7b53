#include "dgd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace dgd::harness {

using geometry::Box;
using geometry::Disk;
using geometry::Polygon;

MapKind parse_map_kind(const std::string& name) {
  if (name == "basic") return MapKind::kBasic;
  if (name == "dense") return MapKind::kDense;
  if (name == "room") return MapKind::kRoom;
  if (name == "shelf") return MapKind::kShelf;
  if (name == "large") return MapKind::kLarge;
  throw InvalidInput("unknown map kind '" + name + "'");
}

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kBasic: return "basic";
    case MapKind::kDense: return "dense";
    case MapKind::kRoom: return "room";
    case MapKind::kShelf: return "shelf";
    case MapKind::kLarge: return "large";
  }
  return "?";
}

KinodynamicLimits default_limits(double robot_radius) {
  KinodynamicLimits lim;
  lim.robot_radius = robot_radius;
  lim.r_obs = robot_radius;
  lim.r_agent = 2.0 * robot_radius;
  lim.v_max = 0.5;
  lim.dt = 0.2;
  return lim;
}

double default_radius(MapKind kind) { return kind == MapKind::kLarge ? 0.005 : 0.04; }

namespace {

Polygon rect(double x0, double y0, double x1, double y1) { return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}}; }

Box box_of(const geometry::Obstacle& o) {
  if (const auto* d = std::get_if<Disk>(&o))
    return Box{d->center - Vec2{d->radius, d->radius}, d->center + Vec2{d->radius, d->radius}};
  return geometry::bounding_box(std::get<Polygon>(o).vertices);
}

double box_gap(const Box& a, const Box& b) {
  const double dx = std::max({0.0, a.min.x - b.max.x, b.min.x - a.max.x});
  const double dy = std::max({0.0, a.min.y - b.max.y, b.min.y - a.max.y});
  return std::hypot(dx, dy);
}

// Adds obstacles from `make` until `count` of them keep `gap` to each other
// and to the bounds.
template <class Make>
void scatter(Workspace& ws, int count, double gap, std::mt19937_64& rng, Make make) {
  const Box inner{ws.bounds.min + Vec2{gap, gap}, ws.bounds.max - Vec2{gap, gap}};
  int placed = 0;
  for (int attempt = 0; placed < count; ++attempt) {
    if (attempt > 100000) throw PlacementFailed("cannot scatter obstacles");
    const geometry::Obstacle o = make(rng);
    const Box b = box_of(o);
    if (b.min.x < inner.min.x || b.min.y < inner.min.y || b.max.x > inner.max.x || b.max.y > inner.max.y) continue;
    bool ok = true;
    for (const auto& other : ws.obstacles)
      if (box_gap(b, box_of(other)) < gap) {
        ok = false;
        break;
      }
    if (!ok) continue;
    ws.obstacles.push_back(o);
    ++placed;
  }
}

auto square_maker(const Box& bounds, double lo = 0.05, double hi = 0.1) {
  return [=](std::mt19937_64& rng) -> geometry::Obstacle {
    std::uniform_real_distribution<double> side(lo, hi), ux(bounds.min.x, bounds.max.x),
        uy(bounds.min.y, bounds.max.y);
    const double s = side(rng);
    const Vec2 c{ux(rng), uy(rng)};
    return rect(c.x - s / 2, c.y - s / 2, c.x + s / 2, c.y + s / 2);
  };
}

void room_map(Workspace& ws, std::mt19937_64& rng) {
  constexpr double kWall = 0.04, kDoor = 0.4;
  std::uniform_real_distribution<double> door(0.15, 1.0 - 0.15 - kDoor);
  const double c0 = 1.0 - kWall / 2, c1 = 1.0 + kWall / 2;
  // vertical wall, one door per half
  const double dl = door(rng), du = 1.0 + door(rng);
  ws.obstacles.push_back(rect(c0, 0.0, c1, dl));
  ws.obstacles.push_back(rect(c0, dl + kDoor, c1, du));
  ws.obstacles.push_back(rect(c0, du + kDoor, c1, 2.0));
  // horizontal halves meet the vertical wall
  const double dw = door(rng), de = 1.0 + door(rng);
  ws.obstacles.push_back(rect(0.0, c0, dw, c1));
  ws.obstacles.push_back(rect(dw + kDoor, c0, c0, c1));
  ws.obstacles.push_back(rect(c1, c0, de, c1));
  ws.obstacles.push_back(rect(de + kDoor, c0, 2.0, c1));
  // one crate per room, clear of walls and doorways
  for (int room = 0; room < 4; ++room) {
    const Vec2 o{room % 2 ? 1.0 : 0.0, room / 2 ? 1.0 : 0.0};
    Workspace local{Box{o + Vec2{0.1, 0.1}, o + Vec2{0.9, 0.9}}, {}};
    scatter(local, 1, 0.15, rng, square_maker(local.bounds));
    ws.obstacles.push_back(local.obstacles.front());
  }
}

void shelf_map(Workspace& ws, std::mt19937_64& rng) {
  constexpr double kWidth = 0.12, kLength = 0.5;
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  for (double cy : {0.6, 1.4})
    for (double cx : {0.55, 1.0, 1.45}) {
      const double x = cx + jitter(rng), y = cy + jitter(rng);
      ws.obstacles.push_back(rect(x - kWidth / 2, y - kLength / 2, x + kWidth / 2, y + kLength / 2));
    }
}

void large_map(Workspace& ws, std::mt19937_64& rng) {
  scatter(ws, 64, 0.1, rng, square_maker(ws.bounds, 0.05, 0.15));
  scatter(ws, 24, 0.1, rng, [&](std::mt19937_64& g) -> geometry::Obstacle {
    std::uniform_real_distribution<double> r(0.03, 0.08), ux(0.0, ws.bounds.max.x), uy(0.0, ws.bounds.max.y);
    const double rad = r(g);
    return Disk{{ux(g), uy(g)}, rad};
  });
  scatter(ws, 16, 0.1, rng, [&](std::mt19937_64& g) -> geometry::Obstacle {
    std::uniform_real_distribution<double> len(0.3, 0.6), ux(0.0, ws.bounds.max.x), uy(0.0, ws.bounds.max.y);
    std::bernoulli_distribution vertical(0.5);
    const double l = len(g);
    const Vec2 c{ux(g), uy(g)};
    return vertical(g) ? rect(c.x - 0.02, c.y - l / 2, c.x + 0.02, c.y + l / 2)
                       : rect(c.x - l / 2, c.y - 0.02, c.x + l / 2, c.y + 0.02);
  });
}

}  // namespace

Scenario gen_map(MapKind kind, std::uint64_t seed) {
  Scenario sc;
  sc.seed = seed;
  sc.limits = default_limits(default_radius(kind));
  const double size = kind == MapKind::kLarge ? 4.0 : 2.0;
  sc.workspace.bounds = Box{{0.0, 0.0}, {size, size}};
  std::mt19937_64 rng(derive_seed(seed, std::uint64_t(kind)));
  switch (kind) {
    case MapKind::kBasic: scatter(sc.workspace, 8, 0.1, rng, square_maker(sc.workspace.bounds)); break;
    case MapKind::kDense: scatter(sc.workspace, 20, 0.1, rng, square_maker(sc.workspace.bounds)); break;
    case MapKind::kRoom: room_map(sc.workspace, rng); break;
    case MapKind::kShelf: shelf_map(sc.workspace, rng); break;
    case MapKind::kLarge: large_map(sc.workspace, rng); break;
  }
  return sc;
}

Scenario place_robots(const Scenario& tmpl, int n_robots, double robot_radius, std::uint64_t seed) {
  if (n_robots < 0 || !(robot_radius > 0)) throw InvalidInput("bad robot count or radius");
  Scenario sc = tmpl;
  sc.seed = seed;
  sc.limits = default_limits(robot_radius);
  sc.starts.clear();
  sc.goals.clear();
  const geometry::FreeSpace fs(sc.workspace, robot_radius);
  const Box& b = sc.workspace.bounds;
  const double min_travel = 0.25 * std::min(b.width(), b.height());
  const double sep = 4.0 * robot_radius;
  std::mt19937_64 rng(derive_seed(seed, 0x9a11));
  std::uniform_real_distribution<double> ux(b.min.x, b.max.x), uy(b.min.y, b.max.y);
  long attempts = 0;
  auto far_from = [&](const Vec2& p, const std::vector<Vec2>& others) {
    return std::all_of(others.begin(), others.end(), [&](const Vec2& q) { return distance(p, q) >= sep; });
  };
  auto draw = [&](auto&& accept) {
    for (;;) {
      if (++attempts > 100000) throw PlacementFailed("no valid placement after 1e5 attempts");
      const Vec2 p{ux(rng), uy(rng)};
      if (fs.contains(p) && accept(p)) return p;
    }
  };
  for (int i = 0; i < n_robots; ++i) sc.starts.push_back(draw([&](const Vec2& p) { return far_from(p, sc.starts); }));
  for (int i = 0; i < n_robots; ++i) {
    const Vec2 s = sc.starts[std::size_t(i)];
    const int comp = fs.component_of(s);
    sc.goals.push_back(draw([&](const Vec2& p) {
      return far_from(p, sc.goals) && distance(p, s) >= min_travel && fs.component_of(p) == comp;
    }));
  }
  return sc;
}

// --- metrics ----------------------------------------------------------------

double metric_path_ratio(const Path& traj, const Vec2& start, const Vec2& goal) {
  const double chord = distance(start, goal);
  if (!(chord > 1e-9)) throw DegenerateInstance("start and goal coincide");
  double len = 0.0;
  for (std::size_t h = 0; h + 1 < traj.size(); ++h) len += distance(traj[h + 1], traj[h]);
  return len / chord;
}

double metric_acceleration(const Path& traj, double dt) {
  if (traj.size() < 3) throw TooShort("acceleration needs three waypoints");
  if (!(dt > 0)) throw InvalidInput("dt must be positive");
  double sum = 0.0;
  for (std::size_t h = 1; h + 1 < traj.size(); ++h) sum += norm(traj[h + 1] - traj[h] * 2.0 + traj[h - 1]);
  return sum / double(traj.size() - 2) / (dt * dt);
}

Path smooth(const Path& traj, int window, int order) {
  const int n = int(traj.size());
  if (window < 1 || window % 2 == 0 || order < 0 || order >= window || window > n)
    throw BadWindow("window must be odd, exceed the order and fit the trajectory");
  Path out = traj;
  const int half = window / 2;
  for (int i = 1; i + 1 < n; ++i) {
    const int lo = std::clamp(i - half, 0, n - window);
    Eigen::MatrixXd V(window, order + 1);
    Eigen::MatrixXd Y(window, 2);
    for (int j = 0; j < window; ++j) {
      const double u = double(lo + j - i);
      double pw = 1.0;
      for (int k = 0; k <= order; ++k, pw *= u) V(j, k) = pw;
      Y(j, 0) = traj[std::size_t(lo + j)].x;
      Y(j, 1) = traj[std::size_t(lo + j)].y;
    }
    const Eigen::MatrixXd c = V.colPivHouseholderQr().solve(Y);
    out[std::size_t(i)] = Vec2{c(0, 0), c(0, 1)};
  }
  return out;
}

// --- svg --------------------------------------------------------------------

namespace {

void points_attr(std::ostream& os, const std::vector<Vec2>& pts) {
  os << "points=\"";
  for (std::size_t k = 0; k < pts.size(); ++k) os << (k ? " " : "") << pts[k].x << ',' << pts[k].y;
  os << '"';
}

std::string color(std::size_t i, std::size_t n) {
  std::ostringstream os;
  os << "hsl(" << (360 * i) / std::max<std::size_t>(n, 1) << ",75%,42%)";
  return os.str();
}

std::vector<Vec2> star(const Vec2& c, double r) {
  std::vector<Vec2> pts;
  for (int k = 0; k < 10; ++k) {
    const double a = std::numbers::pi / 2 + k * std::numbers::pi / 5;
    const double rr = k % 2 ? 0.45 * r : r;
    pts.push_back(c + Vec2{std::cos(a), std::sin(a)} * rr);
  }
  return pts;
}

}  // namespace

std::string svg_string(const Scenario& sc, const std::vector<Path>& trajectories, const SvgOptions& opt) {
  const Box& b = sc.workspace.bounds;
  const double w = b.width(), h = b.height();
  const double stroke = 0.004 * std::max(w, h);
  std::ostringstream os;
  os.precision(9);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"" << int(800 * h / w) << "\" viewBox=\""
     << b.min.x << ' ' << b.min.y << ' ' << w << ' ' << h << "\">\n"
     << "<g transform=\"matrix(1 0 0 -1 0 " << b.min.y + b.max.y << ")\">\n"
     << "<rect x=\"" << b.min.x << "\" y=\"" << b.min.y << "\" width=\"" << w << "\" height=\"" << h
     << "\" fill=\"white\" stroke=\"black\" stroke-width=\"" << stroke << "\"/>\n";
  if (opt.partition) {
    os << "<g id=\"regions\" fill=\"none\" stroke=\"#7a9cc6\" stroke-width=\"" << stroke / 2 << "\">\n";
    for (const auto& r : opt.partition->regions) {
      os << "<polygon ";
      points_attr(os, r.vertices);
      os << "/>\n";
    }
    os << "</g>\n";
  }
  os << "<g id=\"obstacles\" fill=\"#555\">\n";
  for (const auto& o : sc.workspace.obstacles) {
    if (const auto* d = std::get_if<Disk>(&o)) {
      os << "<circle cx=\"" << d->center.x << "\" cy=\"" << d->center.y << "\" r=\"" << d->radius << "\"/>\n";
    } else {
      os << "<polygon ";
      points_attr(os, std::get<Polygon>(o).vertices);
      os << "/>\n";
    }
  }
  os << "</g>\n";
  const std::size_t n = std::max(trajectories.size(), sc.starts.size());
  const double r = sc.limits.robot_radius;
  os << "<g id=\"trajectories\" fill=\"none\" stroke-width=\"" << stroke << "\">\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    Path p = trajectories[i];
    if (opt.smoothed && int(p.size()) >= opt.smooth_window) p = smooth(p, opt.smooth_window, opt.smooth_order);
    os << "<polyline stroke=\"" << color(i, n) << "\" ";
    points_attr(os, p);
    os << "/>\n";
  }
  os << "</g>\n<g id=\"robots\">\n";
  for (std::size_t i = 0; i < sc.starts.size(); ++i)
    os << "<circle cx=\"" << sc.starts[i].x << "\" cy=\"" << sc.starts[i].y << "\" r=\"" << r << "\" fill=\""
       << color(i, n) << "\" fill-opacity=\"0.5\"/>\n";
  for (std::size_t i = 0; i < sc.goals.size(); ++i) {
    os << "<polygon fill=\"" << color(i, n) << "\" ";
    points_attr(os, star(sc.goals[i], 1.5 * r));
    os << "/>\n";
  }
  os << "</g>\n</g>\n</svg>\n";
  return os.str();
}

void render_svg(const Scenario& sc, const std::vector<Path>& trajectories, const std::string& out_path,
                const SvgOptions& opt) {
  const std::string text = svg_string(sc, trajectories, opt);
  std::ofstream f(out_path);
  if (!f) throw IoError("cannot open " + out_path);
  f << text;
  if (!f) throw IoError("cannot write " + out_path);
}

}  // namespace dgd::harness
