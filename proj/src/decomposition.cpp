#include "dgd/decomposition.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "dgd/detail/splice.hpp"

namespace dgd::decomp {

using geometry::contains;

double traffic_priority(const Polygon& r1, const Polygon& r2, std::span<const Path> embedded_plan) {
  double total = 0.0;
  for (const auto& path : embedded_plan) {
    int prev = 0;
    for (std::size_t t = 0; t < path.size(); ++t) {
      const int label = contains(r1, path[t]) ? 1 : (contains(r2, path[t]) ? 2 : 0);
      if (label != 0) total += 1.0;
      if (t > 0 && label != 0 && prev != 0 && label != prev) total += 2.0;
      prev = label;
    }
  }
  return total;
}

namespace {

bool share_segment(const Polygon& a, const Polygon& b) {
  constexpr double kTol = 1e-9;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2& p = a[i];
    const Vec2& q = a[(i + 1) % a.size()];
    const Vec2 pq = q - p;
    const double len = norm(pq);
    if (len <= kTol) continue;
    const Vec2 dir = pq / len;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Vec2& r = b[j];
      const Vec2& s = b[(j + 1) % b.size()];
      if (std::abs(cross(dir, r - p)) > kTol || std::abs(cross(dir, s - p)) > kTol) continue;
      const double t0 = dot(r - p, dir);
      const double t1 = dot(s - p, dir);
      const double lo = std::max(0.0, std::min(t0, t1));
      const double hi = std::min(len, std::max(t0, t1));
      if (hi - lo > kTol) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::vector<int>> build_adjacency(std::span<const Polygon> regions) {
  const std::size_t k = regions.size();
  std::vector<geometry::Box> boxes;
  boxes.reserve(k);
  for (const auto& r : regions) boxes.push_back(geometry::bounding_box(r.vertices));
  std::vector<std::vector<int>> adj(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto& a = boxes[i];
      const auto& b = boxes[j];
      if (a.max.x < b.min.x - 1e-9 || b.max.x < a.min.x - 1e-9 || a.max.y < b.min.y - 1e-9 ||
          b.max.y < a.min.y - 1e-9)
        continue;
      if (share_segment(regions[i], regions[j])) {
        adj[i].push_back(int(j));
        adj[j].push_back(int(i));
      }
    }
  }
  return adj;
}

namespace {

// Merge loop over one simple polygon. Regions are cycles of vertex indices so
// the two sides of a bridge edge never look shared.
class Merger {
 public:
  Merger(const Polygon& simple, std::span<const Path> plan, ConvexPartition& stats)
      : pts_(simple.vertices), plan_(plan), stats_(stats) {}

  std::vector<Polygon> run() {
    const geometry::Triangulation tri = geometry::triangulate(Polygon{pts_});
    stats_.triangle_count += int(tri.triangles.size());
    for (const auto& c : tri.corners) add_region({c[0], c[1], c[2]});
    for (const auto& d : tri.diagonals) push_candidate(d.left, d.right);

    while (!heap_.empty()) {
      const MergeCandidate top = heap_.top();
      heap_.pop();
      if (!alive_[std::size_t(top.first)] || !alive_[std::size_t(top.second)]) {
        ++stats_.stale_skipped;
        continue;
      }
      auto merged = splice(top.first, top.second);
      if (!merged || !geometry::is_convex(positions(*merged))) {
        ++stats_.rejected;
        continue;
      }
      retire(top.first);
      retire(top.second);
      const int id = add_region(std::move(*merged));
      ++stats_.merges;
      for (int nb : neighbours(id)) push_candidate(id, nb);
    }

    std::vector<Polygon> out;
    for (std::size_t r = 0; r < cycles_.size(); ++r)
      if (alive_[r]) out.push_back(positions(cycles_[r]));
    return out;
  }

 private:
  Polygon positions(const std::vector<int>& cycle) const {
    Polygon p;
    p.vertices.reserve(cycle.size());
    for (int v : cycle) p.vertices.push_back(pts_[std::size_t(v)]);
    return p;
  }

  int add_region(std::vector<int> cycle) {
    const int id = int(cycles_.size());
    for (std::size_t i = 0; i < cycle.size(); ++i)
      owner_[{cycle[i], cycle[(i + 1) % cycle.size()]}] = id;
    cycles_.push_back(std::move(cycle));
    alive_.push_back(true);
    return id;
  }

  void retire(int id) {
    alive_[std::size_t(id)] = false;
    const auto& cycle = cycles_[std::size_t(id)];
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      auto it = owner_.find({cycle[i], cycle[(i + 1) % cycle.size()]});
      if (it != owner_.end() && it->second == id) owner_.erase(it);
    }
  }

  std::vector<int> neighbours(int id) const {
    std::vector<int> out;
    const auto& cycle = cycles_[std::size_t(id)];
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      auto it = owner_.find({cycle[(i + 1) % cycle.size()], cycle[i]});
      if (it != owner_.end() && it->second != id) out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::optional<std::vector<int>> splice(int a, int b) const {
    const auto& ca = cycles_[std::size_t(a)];
    for (std::size_t i = 0; i < ca.size(); ++i) {
      auto it = owner_.find({ca[(i + 1) % ca.size()], ca[i]});
      if (it == owner_.end() || it->second != b) continue;
      return detail::splice_cycles(ca, cycles_[std::size_t(b)], i, std::equal_to<int>{});
    }
    return std::nullopt;
  }

  double shared_length(int a, int b) const {
    double len = 0.0;
    const auto& ca = cycles_[std::size_t(a)];
    for (std::size_t i = 0; i < ca.size(); ++i) {
      const int u = ca[i];
      const int v = ca[(i + 1) % ca.size()];
      auto it = owner_.find({v, u});
      if (it != owner_.end() && it->second == b)
        len += distance(pts_[std::size_t(u)], pts_[std::size_t(v)]);
    }
    return len;
  }

  void push_candidate(int a, int b) {
    MergeCandidate c{std::min(a, b), std::max(a, b), 0.0};
    if (plan_.empty())
      c.priority = shared_length(a, b);
    else
      c.priority = traffic_priority(positions(cycles_[std::size_t(a)]),
                                    positions(cycles_[std::size_t(b)]), plan_);
    heap_.push(c);
  }

  std::vector<Vec2> pts_;
  std::span<const Path> plan_;
  ConvexPartition& stats_;
  std::vector<std::vector<int>> cycles_;
  std::vector<bool> alive_;
  std::map<std::pair<int, int>, int> owner_;  // directed edge -> region
  std::priority_queue<MergeCandidate, std::vector<MergeCandidate>, CandidateOrder> heap_;
};

}  // namespace

ConvexPartition pbd(const geometry::FreeSpace& free_space, std::span<const Path> embedded_plan) {
  if (free_space.components().empty()) throw EmptyFreeSpace("workspace has no free space");
  ConvexPartition part;
  part.priority_mode = embedded_plan.empty() ? "edge_length" : "traffic";
  for (const auto& comp : free_space.components()) {
    const Polygon simple = geometry::remove_holes(comp);
    Merger merger(simple, embedded_plan, part);
    for (auto& r : merger.run()) part.regions.push_back(std::move(r));
  }
  part.adjacency = build_adjacency(part.regions);
  return part;
}

ConvexPartition pbd(const geometry::Workspace& ws, std::span<const Path> embedded_plan, double clearance) {
  return pbd(geometry::FreeSpace(ws, clearance), embedded_plan);
}

}  // namespace dgd::decomp
