#pragma once

#include <string>
#include <vector>

#include "dgd/decomposition.hpp"
#include "dgd/mapf.hpp"

namespace dgd::assign {

using decomp::ConvexPartition;
using geometry::Polygon;

struct KinodynamicLimits {
  double robot_radius = 0.04;
  double v_max = 0.5;  // units per second
  double dt = 0.2;     // seconds per continuous waypoint
  double r_obs = 0.04;
  double r_agent = 0.08;

  double max_step() const { return v_max * dt; }
};

/// One MAPF step is one second split into `substeps` waypoints; a robot may
/// cover two cells per second.
KinodynamicLimits make_limits(double robot_radius, double cell_size, int substeps);

/// Cell centres of every plan vertex.
std::vector<Path> embed_plan(const mapf::DiscretePlan& plan, const mapf::GridGraph& graph);

/// Lowest region id containing `p` (1e-9 tolerance), or -1.
int region_of(const ConvexPartition& partition, const Vec2& p);

struct Transition {
  int robot = 0;
  int region_out = 0;
  int t_out = 0;
  Vec2 pos_out;
  int region_in = 0;
  int t_in = 0;
  Vec2 pos_in;
};

/// Region changes between consecutive discrete waypoints.
std::vector<Transition> extract_transitions(const ConvexPartition& partition,
                                            const std::vector<Path>& plan_embedded);

/// A robot's stay in one region. Times count continuous waypoints.
struct Segment {
  int robot = 0;
  int h_enter = 0;
  int h_exit = 0;
  Vec2 pos_enter;
  Vec2 pos_exit;
  Path waypoints;  // h_exit - h_enter + 1 points along the embedded plan
};

struct Subproblem {
  int region = 0;
  Polygon polygon;
  std::vector<Segment> segments;  // ordered by (h_enter, robot)
  int horizon = 0;                // span of the segment windows
  KinodynamicLimits limits;
};

/// Cuts every robot's embedded path where it crosses region boundaries. Each
/// handoff point lies on the crossed boundary and is reached at an integer
/// waypoint index, so neighbouring segments share it exactly.
std::vector<Subproblem> build_subproblems(const ConvexPartition& partition,
                                          const std::vector<Transition>& transitions,
                                          const std::vector<Path>& plan_embedded,
                                          const KinodynamicLimits& limits, int substeps);

/// Per-robot trajectories of `length` waypoints assembled from segments.
std::vector<Path> stitch(const std::vector<Subproblem>& subproblems, int robots, int length);

/// Empty when the segment windows tile [0, length - 1] per robot and handoff
/// points coincide; otherwise one message per defect.
std::vector<std::string> check_tiling(const std::vector<Subproblem>& subproblems, int robots,
                                      int length);

}  // namespace dgd::assign
