#pragma once

#include <cstdint>
#include <vector>

#include "dgd/assignment.hpp"
#include "dgd/penalty.hpp"

namespace dgd::repair {

using assign::KinodynamicLimits;
using diffusion::TimedPath;
using diffusion::TrajectorySet;

inline constexpr double kFeasibilityTol = 1e-9;

struct ObstacleViolation {
  int robot = 0;
  int t = 0;
  double depth = 0.0;
};

struct AgentViolation {
  int i = 0;
  int j = 0;
  int t = 0;
  double depth = 0.0;
};

struct KinematicViolation {
  int robot = 0;
  int t = 0;  // step from t to t + 1
  double excess = 0.0;
};

struct ViolationReport {
  std::vector<ObstacleViolation> obstacle_violations;
  std::vector<AgentViolation> agent_violations;
  std::vector<KinematicViolation> kinematic_violations;

  bool empty() const {
    return obstacle_violations.empty() && agent_violations.empty() && kinematic_violations.empty();
  }
  std::size_t size() const {
    return obstacle_violations.size() + agent_violations.size() + kinematic_violations.size();
  }
};

/// Clearance to obstacles and bounds, pairwise separation and step length at
/// every waypoint. Entries are reported only beyond kFeasibilityTol.
ViolationReport check_feasibility(const TrajectorySet& trajs, const KinodynamicLimits& limits,
                                  const geometry::Workspace& ws);

struct AlmConfig {
  double nu0 = 0.0;
  double rho0 = 1.0;
  double rho_growth = 2.0;
  double residual_tol = 1e-6;
  int max_outer = 20;
  int inner_steps = 200;
  double inner_lr = 0.01;
  double margin = 1e-5;  // constraints are tightened by this much inside the penalty
  std::uint64_t seed = 0;  // waypoint jitter after a stalled inner solve
};

/// Per outer iteration: residual after the inner solve, multipliers, penalty.
struct AlmTrace {
  std::vector<double> residual;
  std::vector<double> nu_agent;
  std::vector<double> nu_kinematic;
  std::vector<double> rho;
};

/// Largest separation or step-length violation.
double constraint_residual(std::span<const TimedPath> paths, const KinodynamicLimits& limits);

/// Augmented-Lagrangian projection onto separation and step-length
/// constraints; endpoints stay fixed. With a region every inner step is
/// followed by projection into it.
std::vector<TimedPath> alm_project(const std::vector<TimedPath>& x, const KinodynamicLimits& limits,
                                   const AlmConfig& cfg, const geometry::Polygon* region = nullptr,
                                   AlmTrace* trace = nullptr);

struct PointConstraint {
  const geometry::Polygon* region = nullptr;
  bool pinned = false;
};
using PointConstraints = std::vector<std::vector<PointConstraint>>;  // [path][waypoint]

/// Per-waypoint variant: pinned waypoints never move, the others are kept in
/// their own region.
std::vector<TimedPath> alm_project(const std::vector<TimedPath>& x, const KinodynamicLimits& limits,
                                   const AlmConfig& cfg, const PointConstraints& constraints,
                                   AlmTrace* trace = nullptr);

TrajectorySet alm_project(const TrajectorySet& x, const KinodynamicLimits& limits, const AlmConfig& cfg,
                          AlmTrace* trace = nullptr);

/// `trajs` holds one path per segment of the subproblem. Feasible input is
/// returned untouched.
std::vector<Path> repair_subproblem(const assign::Subproblem& sub, const std::vector<Path>& trajs,
                                    const KinodynamicLimits& limits, const AlmConfig& cfg = {});

/// True when a subproblem's segments meet separation, step length and
/// region containment.
bool subproblem_feasible(const assign::Subproblem& sub, const std::vector<Path>& trajs,
                         const KinodynamicLimits& limits);

}  // namespace dgd::repair
