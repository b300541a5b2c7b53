#include "dgd/penalty.hpp"

namespace dgd::diffusion {

std::vector<double> obstacle_margins(std::span<const Obstacle> obstacles, double robot_radius) {
  std::vector<double> out;
  out.reserve(obstacles.size());
  for (const auto& o : obstacles) {
    if (const auto* d = std::get_if<geometry::Disk>(&o))
      out.push_back(d->radius + robot_radius);
    else
      out.push_back(robot_radius);
  }
  return out;
}

double obstacle_distance(const Obstacle& o, const Vec2& p, Vec2* grad) {
  if (const auto* d = std::get_if<geometry::Disk>(&o)) {
    const Vec2 v = p - d->center;
    const double n = norm(v);
    if (grad) *grad = n > 0 ? v / n : Vec2{};
    return n;
  }
  const auto& poly = std::get<geometry::Polygon>(o);
  double best = -1.0;
  Vec2 closest;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 c = geometry::closest_on_segment(p, poly[i], poly[(i + 1) % poly.size()]);
    const double dd = distance(p, c);
    if (best < 0 || dd < best) {
      best = dd;
      closest = c;
    }
  }
  const bool inside = geometry::point_in_polygon(poly, p) && best > 0;
  if (grad) *grad = best > 0 ? (p - closest) / best * (inside ? -1.0 : 1.0) : Vec2{};
  return inside ? -best : best;
}

double penalty_obstacle(const Path& traj, std::span<const Obstacle> obstacles, std::span<const double> r_obs) {
  double total = 0.0;
  for (const auto& p : traj)
    for (std::size_t k = 0; k < obstacles.size(); ++k)
      total += std::max(0.0, r_obs[k] - obstacle_distance(obstacles[k], p));
  return total;
}

std::vector<Vec2> grad_penalty_obstacle(const Path& traj, std::span<const Obstacle> obstacles,
                                        std::span<const double> r_obs) {
  std::vector<Vec2> g(traj.size());
  for (std::size_t h = 0; h < traj.size(); ++h)
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      Vec2 dg;
      if (r_obs[k] - obstacle_distance(obstacles[k], traj[h], &dg) > 0) g[h] -= dg;
    }
  return g;
}

namespace {

void check_lengths(const Path& a, std::span<const Path> others) {
  for (const auto& o : others)
    if (o.size() != a.size()) throw LengthMismatch("trajectories differ in length");
}

}  // namespace

double penalty_agents(const Path& traj_i, std::span<const Path> others, double r_agent) {
  check_lengths(traj_i, others);
  double total = 0.0;
  for (const auto& o : others)
    for (std::size_t h = 0; h < traj_i.size(); ++h) total += std::max(0.0, r_agent - distance(traj_i[h], o[h]));
  return total;
}

std::vector<Vec2> grad_penalty_agents(const Path& traj_i, std::span<const Path> others, double r_agent) {
  check_lengths(traj_i, others);
  std::vector<Vec2> g(traj_i.size());
  for (const auto& o : others)
    for (std::size_t h = 0; h < traj_i.size(); ++h) {
      const Vec2 v = traj_i[h] - o[h];
      const double n = norm(v);
      if (n < r_agent && n > 0) g[h] -= v / n;
    }
  return g;
}

double penalty_agents_total(std::span<const Path> trajs, double r_agent) {
  double total = 0.0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (trajs[i].size() != trajs[0].size()) throw LengthMismatch("trajectories differ in length");
    for (std::size_t j = i + 1; j < trajs.size(); ++j)
      for (std::size_t h = 0; h < trajs[i].size(); ++h)
        total += std::max(0.0, r_agent - distance(trajs[i][h], trajs[j][h]));
  }
  return total;
}

double penalty_agents_timed(std::span<const TimedPath> paths, double r_agent,
                            std::vector<std::vector<Vec2>>* grad) {
  if (grad) {
    grad->resize(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) (*grad)[i].assign(paths[i].points.size(), Vec2{});
  }
  double total = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      const auto& a = paths[i];
      const auto& b = paths[j];
      const int lo = std::max(a.offset, b.offset);
      const int hi = std::min(a.offset + int(a.points.size()), b.offset + int(b.points.size()));
      for (int h = lo; h < hi; ++h) {
        const Vec2 v = a.points[std::size_t(h - a.offset)] - b.points[std::size_t(h - b.offset)];
        const double n = norm(v);
        if (n >= r_agent) continue;
        total += r_agent - n;
        if (grad && n > 0) {
          (*grad)[i][std::size_t(h - a.offset)] -= v / n;
          (*grad)[j][std::size_t(h - b.offset)] += v / n;
        }
      }
    }
  return total;
}

double penalty_kinematic(const Path& traj, double max_step, std::vector<Vec2>* grad) {
  if (grad) grad->assign(traj.size(), Vec2{});
  double total = 0.0;
  for (std::size_t h = 0; h + 1 < traj.size(); ++h) {
    const Vec2 v = traj[h + 1] - traj[h];
    const double n = norm(v);
    if (n <= max_step) continue;
    total += n - max_step;
    if (grad) {
      (*grad)[h + 1] += v / n;
      (*grad)[h] -= v / n;
    }
  }
  return total;
}

}  // namespace dgd::diffusion
