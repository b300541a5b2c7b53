#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dgd/assignment.hpp"
#include "dgd/decomposition.hpp"
#include "dgd/diffusion.hpp"
#include "dgd/mapf.hpp"
#include "dgd/repair.hpp"

namespace dgd::harness {

using assign::KinodynamicLimits;
using geometry::Workspace;

enum class MapKind { kBasic, kDense, kRoom, kShelf, kLarge };

MapKind parse_map_kind(const std::string& name);  // throws InvalidInput
std::string to_string(MapKind kind);

struct Scenario {
  Workspace workspace;
  std::vector<Vec2> starts;
  std::vector<Vec2> goals;
  KinodynamicLimits limits;
  std::uint64_t seed = 0;
};

/// Continuous limits shared by every generated scenario: 0.1 units per
/// waypoint at dt = 0.2 s.
KinodynamicLimits default_limits(double robot_radius);

/// Robot radius used for a map family.
double default_radius(MapKind kind);

/// Map without robots. Every family but `large` lives in 2x2 bounds.
Scenario gen_map(MapKind kind, std::uint64_t seed);

/// Rejection-samples starts and goals with clearance >= r from obstacles and
/// bounds, pairwise separation >= 4r among starts and among goals, each goal
/// in the start's free-space component and at least a quarter of the map
/// width away from it.
Scenario place_robots(const Scenario& tmpl, int n_robots, double robot_radius, std::uint64_t seed);

// --- pipeline ---------------------------------------------------------------

struct PipelineConfig {
  double cell = 0.25;
  double refined_cell = 0.125;  // second grid when the first is unsolvable
  double time_limit = 900.0;     // seconds
  int workers = 0;               // 0: DGD_WORKERS or hardware concurrency
  bool warm_start = true;
  bool global_repair = true;     // ALM pass over all robots when handoffs conflict
  std::shared_ptr<const diffusion::ScoreModel> model;
  bool train_if_missing = false;  // train on the instance partition
  diffusion::TrainConfig train;
  int train_samples = 5000;
  diffusion::SamplerConfig sampler;
  repair::AlmConfig alm;
  mapf::MapfConfig mapf;
};

struct RunArtifacts {
  double cell = 0.0;
  int substeps = 0;
  int lead_in = 0;   // MAPF steps before the grid plan
  int lead_out = 0;  // after it
  mapf::DiscretePlan plan;
  std::vector<Path> embedded;  // discrete waypoints, lead-in and lead-out included
  decomp::ConvexPartition partition;
  std::vector<assign::Subproblem> subproblems;   // warm-start waypoints
  std::vector<std::vector<Path>> sampled;        // per subproblem, before repair
  std::vector<std::vector<Path>> repaired;       // per subproblem
  bool global_repair_used = false;
};

struct RunResult {
  bool success = false;
  std::string cause;   // failing stage, empty on success
  std::string detail;  // error message of the failing stage
  double wall_time = 0.0;
  std::vector<Path> trajectories;
  double dt = 0.0;
  std::vector<double> path_ratio;    // P per robot
  std::vector<double> acceleration;  // A per robot
  double mean_path_ratio = 0.0;
  double mean_acceleration = 0.0;
  repair::ViolationReport report;
  RunArtifacts artifacts;
};

/// Grid plan and its continuous embedding with lead-in and lead-out steps
/// from the true starts and to the true goals.
struct DiscreteStage {
  double cell = 0.0;
  int substeps = 0;
  int lead_in = 0;
  int lead_out = 0;
  mapf::GridGraph graph;
  mapf::DiscretePlan plan;
  std::vector<Path> embedded;
};

/// Waypoints per MAPF step so a cell is covered at a third of the speed
/// limit, leaving room for several handoffs inside one step.
int substeps_for(double cell, const KinodynamicLimits& limits);

/// Tries `cell`, then `refined_cell`. Throws the last stage error.
DiscreteStage plan_discrete(const Scenario& scenario, const geometry::FreeSpace& free_space,
                            const PipelineConfig& config);

int worker_count(int requested);

/// Runs fn(0..n-1) on up to `workers` threads. Exceptions are rethrown for the
/// lowest failing index after all tasks finish.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// Deterministic per-stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Model trained on partitions of the four desk-scale map families.
diffusion::ScoreModel default_model(std::uint64_t seed, int samples = 10000, int epochs = 50);

RunResult run_pipeline(const Scenario& scenario, const PipelineConfig& config);

// --- metrics ----------------------------------------------------------------

double metric_path_ratio(const Path& traj, const Vec2& start, const Vec2& goal);
double metric_acceleration(const Path& traj, double dt);

/// Savitzky-Golay smoothing per coordinate; endpoints unchanged.
Path smooth(const Path& traj, int window, int order);

// --- output -----------------------------------------------------------------

struct SvgOptions {
  const decomp::ConvexPartition* partition = nullptr;
  bool smoothed = false;
  int smooth_window = 7;
  int smooth_order = 2;
};

std::string svg_string(const Scenario& scenario, const std::vector<Path>& trajectories,
                       const SvgOptions& options = {});
void render_svg(const Scenario& scenario, const std::vector<Path>& trajectories, const std::string& out_path,
                const SvgOptions& options = {});

// --- benchmark --------------------------------------------------------------

struct BenchConfig {
  std::vector<MapKind> maps;
  std::vector<int> robots;
  int instances = 25;
  std::uint64_t seed = 0;
  int workers = 0;  // instances in flight
  PipelineConfig pipeline;
};

struct BenchRun {
  MapKind map = MapKind::kBasic;
  int robots = 0;
  int instance = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::string cause;
  double wall_time = 0.0;
  double mean_path_ratio = 0.0;
  double mean_acceleration = 0.0;
};

struct BenchRow {
  MapKind map = MapKind::kBasic;
  int robots = 0;
  int instances = 0;
  int successes = 0;
  std::optional<double> time;  // means over successes
  std::optional<double> path_ratio;
  std::optional<double> acceleration;
  double success_rate() const { return instances ? 100.0 * successes / instances : 0.0; }
};

/// Instance seed for (map, robots, instance).
std::uint64_t instance_seed(std::uint64_t base, MapKind map, int robots, int instance);

std::vector<BenchRun> bench_runs(const BenchConfig& config);
std::vector<BenchRow> aggregate(const std::vector<BenchRun>& runs);

/// Canonical CSV. Wall time is included only on request since it varies
/// between reruns.
std::string bench_csv(const std::vector<BenchRow>& rows, bool with_time = false);
std::string bench_table(const std::vector<BenchRow>& rows);

}  // namespace dgd::harness
