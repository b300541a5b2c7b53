#pragma once

#include <span>
#include <string>
#include <vector>

#include "dgd/geometry.hpp"

namespace dgd::decomp {

using geometry::Polygon;

/// Disjoint convex regions covering the (inflated) free space.
struct ConvexPartition {
  std::vector<Polygon> regions;
  std::vector<std::vector<int>> adjacency;  // sorted neighbour ids per region

  // bookkeeping from the merge loop
  std::string priority_mode;  // "traffic" or "edge_length"
  int triangle_count = 0;
  int merges = 0;
  int stale_skipped = 0;
  int rejected = 0;
};

struct MergeCandidate {
  int first = 0;   // lower region id
  int second = 0;  // higher region id
  double priority = 0.0;
};

/// Heap order: higher priority first, then lexicographically smaller id pair.
struct CandidateOrder {
  bool operator()(const MergeCandidate& a, const MergeCandidate& b) const {
    if (a.priority != b.priority) return a.priority < b.priority;
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  }
};

/// Robot traffic through the pair: occupancies in either region plus twice the
/// number of steps crossing between them.
double traffic_priority(const Polygon& r1, const Polygon& r2, std::span<const Path> embedded_plan);

/// Symmetric adjacency: regions sharing a boundary segment of positive length.
std::vector<std::vector<int>> build_adjacency(std::span<const Polygon> regions);

/// Priority-based decomposition. With an empty plan the priority falls back to
/// the length of the shared edge.
ConvexPartition pbd(const geometry::FreeSpace& free_space, std::span<const Path> embedded_plan);

ConvexPartition pbd(const geometry::Workspace& ws, std::span<const Path> embedded_plan,
                    double clearance = 0.0);

}  // namespace dgd::decomp
