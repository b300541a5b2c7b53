#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgd/geometry.hpp"

namespace dgd::mapf {

struct Cell {
  int ix = 0;
  int iy = 0;
  auto operator<=>(const Cell&) const = default;
};

/// 4-connected grid over free cell centres.
class GridGraph {
 public:
  GridGraph() = default;
  GridGraph(Vec2 origin, double cell_size, int nx, int ny);

  /// Test helper: rows[iy][ix] is '.' for a free cell, anything else blocked.
  static GridGraph from_mask(const std::vector<std::string>& rows, double cell_size = 1.0,
                             Vec2 origin = {0.0, 0.0});

  int add_vertex(Cell c);
  void add_edge(int u, int v);

  double cell_size() const { return cell_size_; }
  Vec2 origin() const { return origin_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return int(cells_.size()); }
  int num_edges() const { return edges_; }

  const Cell& cell(int v) const { return cells_.at(std::size_t(v)); }
  const std::vector<int>& neighbors(int v) const { return adj_.at(std::size_t(v)); }
  bool adjacent(int u, int v) const;
  int vertex_at(Cell c) const;  // -1 when blocked or outside

  Vec2 embed(int v) const;
  Vec2 center(Cell c) const;
  int snap(const Vec2& p) const;  // nearest vertex, lowest id on ties

  /// Connected component label per vertex.
  std::vector<int> components() const;
  /// Shortest hop distance from every vertex to `goal` (-1 unreachable).
  std::vector<int> distances_to(int goal) const;

 private:
  Vec2 origin_;
  double cell_size_ = 1.0;
  int nx_ = 0;
  int ny_ = 0;
  int edges_ = 0;
  std::vector<Cell> cells_;
  std::vector<int> index_;
  std::vector<std::vector<int>> adj_;
};

/// Vertices are cell centres inside the free space inflated by the robot
/// radius; edges join orthogonal neighbours whose connecting segment is free.
GridGraph build_grid(const geometry::FreeSpace& free_space, double cell_size);
GridGraph build_grid(const geometry::Workspace& ws, double cell_size, double robot_radius);

struct DiscretePlan {
  std::vector<std::vector<int>> paths;  // padded to makespan + 1 entries
  int makespan = 0;
  std::vector<int> starts;
  std::vector<int> goals;

  int sum_of_costs() const;
};

struct MapfConfig {
  int max_timesteps = 256;
  int restarts = 20;
  std::uint64_t seed = 0;
  int cbs_max_agents = 8;
  int cbs_node_budget = 4000;
  std::size_t joint_state_budget = 2'000'000;  // last resort for <= 4 robots
};

DiscretePlan solve_mapf(const GridGraph& graph, const std::vector<int>& starts,
                        const std::vector<int>& goals, const MapfConfig& config = {});

struct Conflict {
  std::string type;  // "vertex", "edge", or "move" for a non-edge step
  int i = 0;
  int j = 0;
  int t = 0;
  bool operator==(const Conflict&) const = default;
};

/// Vertex and edge conflicts; with a graph also steps that are not edges.
std::vector<Conflict> validate_plan(const DiscretePlan& plan, const GridGraph* graph = nullptr);

/// Per point, the nearest vertex reachable by a free straight segment, skipping
/// vertices already taken by earlier points.
std::vector<int> snap_distinct(const GridGraph& graph, const geometry::FreeSpace& free_space,
                               const std::vector<Vec2>& points);

}  // namespace dgd::mapf
