#pragma once

#include <span>
#include <vector>

#include "dgd/geometry.hpp"

namespace dgd::diffusion {

using geometry::Obstacle;

/// Waypoint sequences of one subproblem or one instance, sampled every dt.
struct TrajectorySet {
  std::vector<Path> trajs;
  double dt = 0.2;
};

/// A trajectory that starts at global waypoint index `offset`.
struct TimedPath {
  int offset = 0;
  Path points;
};

/// Hinge threshold per obstacle as used by the obstacle penalty: distance to
/// a disk is taken to its centre, so the disk radius is added there.
std::vector<double> obstacle_margins(std::span<const Obstacle> obstacles, double robot_radius);

/// Signed distance from `p` to the obstacle: to the centre for disks, to the
/// boundary for polygons (negative inside). `grad` receives d/dp.
double obstacle_distance(const Obstacle& o, const Vec2& p, Vec2* grad = nullptr);

/// Sum over waypoints and obstacles of max(0, r_obs - distance).
double penalty_obstacle(const Path& traj, std::span<const Obstacle> obstacles,
                        std::span<const double> r_obs);
std::vector<Vec2> grad_penalty_obstacle(const Path& traj, std::span<const Obstacle> obstacles,
                                        std::span<const double> r_obs);

/// Sum over steps and other robots of max(0, r_agent - |pi_i - pi_j|).
double penalty_agents(const Path& traj_i, std::span<const Path> others, double r_agent);
std::vector<Vec2> grad_penalty_agents(const Path& traj_i, std::span<const Path> others, double r_agent);

/// Pairwise total over a set, each unordered pair counted once.
double penalty_agents_total(std::span<const Path> trajs, double r_agent);

/// Same over time-offset paths; only overlapping indices interact. When
/// `grad` is given it is resized to match and filled.
double penalty_agents_timed(std::span<const TimedPath> paths, double r_agent,
                            std::vector<std::vector<Vec2>>* grad = nullptr);

/// Sum of max(0, |step| - max_step) over consecutive waypoints.
double penalty_kinematic(const Path& traj, double max_step, std::vector<Vec2>* grad = nullptr);

}  // namespace dgd::diffusion
