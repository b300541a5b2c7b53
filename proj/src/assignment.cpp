#include "dgd/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dgd::assign {

KinodynamicLimits make_limits(double robot_radius, double cell_size, int substeps) {
  if (substeps < 1) throw InvalidInput("substeps must be positive");
  KinodynamicLimits lim;
  lim.robot_radius = robot_radius;
  lim.r_obs = robot_radius;
  lim.r_agent = 2.0 * robot_radius;
  lim.dt = 1.0 / substeps;
  lim.v_max = 2.0 * cell_size;
  return lim;
}

std::vector<Path> embed_plan(const mapf::DiscretePlan& plan, const mapf::GridGraph& graph) {
  std::vector<Path> out;
  out.reserve(plan.paths.size());
  for (const auto& p : plan.paths) {
    Path q;
    q.reserve(p.size());
    for (int v : p) q.push_back(graph.embed(v));
    out.push_back(std::move(q));
  }
  return out;
}

int region_of(const ConvexPartition& partition, const Vec2& p) {
  for (std::size_t r = 0; r < partition.regions.size(); ++r)
    if (geometry::contains(partition.regions[r], p, 1e-9)) return int(r);
  return -1;
}

std::vector<Transition> extract_transitions(const ConvexPartition& partition,
                                            const std::vector<Path>& plan_embedded) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < plan_embedded.size(); ++i) {
    const Path& p = plan_embedded[i];
    int prev = -1;
    for (std::size_t t = 0; t < p.size(); ++t) {
      const int r = region_of(partition, p[t]);
      if (r < 0)
        throw UncoveredWaypoint("robot " + std::to_string(i) + " at step " + std::to_string(t));
      if (t > 0 && r != prev)
        out.push_back({int(i), prev, int(t) - 1, p[t - 1], r, int(t), p[t]});
      prev = r;
    }
  }
  return out;
}

namespace {

struct Piece {
  int region;
  double begin;  // continuous MAPF time
  double end;
  Vec2 pos_end;
};

// Region pieces along one robot's polyline, consecutive equal labels merged.
std::vector<Piece> label_path(const ConvexPartition& part, const Path& p) {
  std::vector<Piece> pieces;
  auto add = [&](int region, double b, double e, Vec2 pe) {
    if (!pieces.empty() && pieces.back().region == region) {
      pieces.back().end = e;
      pieces.back().pos_end = pe;
    } else {
      pieces.push_back({region, b, e, pe});
    }
  };
  if (p.size() == 1) {
    const int r = region_of(part, p[0]);
    if (r < 0) throw UncoveredWaypoint("start outside every region");
    pieces.push_back({r, 0.0, 0.0, p[0]});
    return pieces;
  }
  for (std::size_t t = 0; t + 1 < p.size(); ++t) {
    const Vec2 a = p[t], b = p[t + 1];
    if (a == b) {
      const int r = region_of(part, a);
      if (r < 0) throw UncoveredWaypoint("waypoint outside every region");
      add(r, double(t), double(t + 1), a);
      continue;
    }
    std::vector<double> cuts{0.0, 1.0};
    for (const auto& reg : part.regions)
      if (auto iv = geometry::clip_segment(reg, a, b, 0.0)) {
        cuts.push_back((*iv)[0]);
        cuts.push_back((*iv)[1]);
      }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double s0 = cuts[k], s1 = cuts[k + 1];
      if (s1 - s0 < 1e-12) continue;
      const int r = region_of(part, a + (b - a) * (0.5 * (s0 + s1)));
      if (r < 0) throw UncoveredWaypoint("path leaves every region");
      add(r, double(t) + s0, double(t) + s1, s1 == 1.0 ? b : a + (b - a) * s1);
    }
  }
  return pieces;
}

struct Knot {
  int k;
  Vec2 pos;
};

Vec2 interpolate(const std::vector<Knot>& knots, int k) {
  auto it = std::lower_bound(knots.begin(), knots.end(), k, [](const Knot& a, int v) { return a.k < v; });
  if (it == knots.end()) return knots.back().pos;
  if (it->k == k || it == knots.begin()) return it->pos;
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  const double w = double(k - lo.k) / double(hi.k - lo.k);
  return lo.pos + (hi.pos - lo.pos) * w;
}

// Handoffs j..e-1 fall strictly inside MAPF step t. Picks increasing
// substep indices minimising the fastest piece, then the offset from tau * S.
void place_in_step(const std::vector<Piece>& pieces, std::size_t j, std::size_t e, int t, int S, std::vector<int>& k) {
  const int m = int(e - j);
  if (m > S - 1) {
    for (int a = 0; a < m; ++a) k[j + std::size_t(a)] = t * S + std::min(a + 1, S - 1);
    return;
  }
  std::vector<int> pick(static_cast<std::size_t>(m)), best;
  double best_speed = 0.0, best_off = 0.0;
  auto score = [&] {
    double speed = 0.0, off = 0.0, prev_s = 0.0;
    int prev_k = 0;
    for (int a = 0; a <= m; ++a) {
      const double s = a < m ? pieces[j + std::size_t(a)].end - t : 1.0;
      const int kk = a < m ? pick[std::size_t(a)] : S;
      speed = std::max(speed, (s - prev_s) / (kk - prev_k));
      if (a < m) off += std::abs(kk - s * S);
      prev_s = s;
      prev_k = kk;
    }
    if (best.empty() || speed < best_speed - 1e-12 || (speed <= best_speed + 1e-12 && off < best_off - 1e-12)) {
      best = pick;
      best_speed = speed;
      best_off = off;
    }
  };
  // increasing m-subsets of 1..S-1
  auto rec = [&](auto&& self, int a, int lo) -> void {
    if (a == m) return score();
    for (int v = lo; v <= S - 1 - (m - 1 - a); ++v) {
      pick[std::size_t(a)] = v;
      self(self, a + 1, v + 1);
    }
  };
  rec(rec, 0, 1);
  for (int a = 0; a < m; ++a) k[j + std::size_t(a)] = t * S + best[std::size_t(a)];
}

}  // namespace

std::vector<Subproblem> build_subproblems(const ConvexPartition& partition,
                                          const std::vector<Transition>& transitions,
                                          const std::vector<Path>& plan_embedded,
                                          const KinodynamicLimits& limits, int substeps) {
  if (substeps < 1) throw InvalidInput("substeps must be positive");
  // the discrete transitions must chain per robot
  std::map<int, const Transition*> last;
  for (const auto& tr : transitions) {
    if (tr.t_in != tr.t_out + 1 || tr.region_in == tr.region_out)
      throw InconsistentChain("malformed transition for robot " + std::to_string(tr.robot));
    auto it = last.find(tr.robot);
    if (it != last.end() && (it->second->region_in != tr.region_out || it->second->t_in > tr.t_out))
      throw InconsistentChain("transitions of robot " + std::to_string(tr.robot) + " do not chain");
    last[tr.robot] = &tr;
  }

  const int S = substeps;
  std::map<int, Subproblem> subs;
  for (std::size_t i = 0; i < plan_embedded.size(); ++i) {
    const Path& p = plan_embedded[i];
    if (p.empty()) continue;
    const int M = int(p.size()) - 1;
    const std::vector<Piece> pieces = label_path(partition, p);

    // integer handoff indices, strictly increasing, inside their MAPF step
    const std::size_t m = pieces.size() - 1;
    std::vector<int> k(m);
    for (std::size_t j = 0; j < m;) {
      const double tau = pieces[j].end;
      const double t = std::floor(tau);
      if (tau == t) {
        k[j++] = int(t) * S;
        continue;
      }
      std::size_t e = j;
      while (e < m && pieces[e].end < t + 1.0 && pieces[e].end > t) ++e;
      place_in_step(pieces, j, e, int(t), S, k);
      j = e;
    }
    for (std::size_t j = 0; j < m; ++j)
      if ((j > 0 && k[j] <= k[j - 1]) || k[j] <= 0 || k[j] >= M * S)
        throw InconsistentChain("robot " + std::to_string(i) +
                                " crosses more regions in one step than there are substeps");

    std::vector<Knot> knots;
    for (int t = 0; t <= M; ++t) knots.push_back({t * S, p[std::size_t(t)]});
    for (std::size_t j = 0; j < m; ++j) knots.push_back({k[j], pieces[j].pos_end});
    std::stable_sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.k < b.k; });
    knots.erase(std::unique(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.k == b.k; }),
                knots.end());
    // handoff knots must win over a coinciding grid knot; they hold the same point
    for (std::size_t j = 0; j < m; ++j)
      for (auto& kn : knots)
        if (kn.k == k[j]) kn.pos = pieces[j].pos_end;

    for (std::size_t j = 0; j <= m; ++j) {
      Segment seg;
      seg.robot = int(i);
      seg.h_enter = j == 0 ? 0 : k[j - 1];
      seg.h_exit = j == m ? M * S : k[j];
      for (int h = seg.h_enter; h <= seg.h_exit; ++h) seg.waypoints.push_back(interpolate(knots, h));
      seg.pos_enter = seg.waypoints.front();
      seg.pos_exit = seg.waypoints.back();
      auto& sub = subs[pieces[j].region];
      sub.region = pieces[j].region;
      sub.segments.push_back(std::move(seg));
    }
  }

  std::vector<Subproblem> out;
  for (auto& [r, sub] : subs) {
    sub.polygon = partition.regions.at(std::size_t(r));
    sub.limits = limits;
    std::stable_sort(sub.segments.begin(), sub.segments.end(), [](const Segment& a, const Segment& b) {
      return a.h_enter != b.h_enter ? a.h_enter < b.h_enter : a.robot < b.robot;
    });
    int h0 = sub.segments.front().h_enter, h1 = sub.segments.front().h_exit;
    for (const auto& s : sub.segments) {
      h0 = std::min(h0, s.h_enter);
      h1 = std::max(h1, s.h_exit);
    }
    sub.horizon = h1 - h0;
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<Path> stitch(const std::vector<Subproblem>& subproblems, int robots, int length) {
  std::vector<Path> out(std::size_t(robots), Path(std::size_t(std::max(length, 0))));
  for (const auto& sub : subproblems)
    for (const auto& seg : sub.segments) {
      if (seg.robot < 0 || seg.robot >= robots) throw InvalidInput("segment robot out of range");
      for (int h = seg.h_enter; h <= seg.h_exit && h < length; ++h)
        out[std::size_t(seg.robot)][std::size_t(h)] = seg.waypoints[std::size_t(h - seg.h_enter)];
    }
  return out;
}

std::vector<std::string> check_tiling(const std::vector<Subproblem>& subproblems, int robots, int length) {
  std::vector<std::string> problems;
  std::vector<std::vector<std::pair<const Segment*, int>>> by_robot(static_cast<std::size_t>(robots));
  for (const auto& sub : subproblems)
    for (const auto& seg : sub.segments) {
      if (seg.robot < 0 || seg.robot >= robots) {
        problems.push_back("segment with unknown robot");
        continue;
      }
      if (int(seg.waypoints.size()) != seg.h_exit - seg.h_enter + 1)
        problems.push_back("robot " + std::to_string(seg.robot) + ": waypoint count differs from window");
      by_robot[std::size_t(seg.robot)].push_back({&seg, sub.region});
    }
  for (int r = 0; r < robots; ++r) {
    auto& segs = by_robot[std::size_t(r)];
    const std::string who = "robot " + std::to_string(r) + ": ";
    if (segs.empty()) {
      problems.push_back(who + "no segments");
      continue;
    }
    std::sort(segs.begin(), segs.end(), [](auto& a, auto& b) { return a.first->h_enter < b.first->h_enter; });
    // half-open ownership [h_enter, h_exit); the last segment also owns the end
    std::vector<int> owner(std::size_t(length), -1);
    int cursor = 0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const Segment& s = *segs[k].first;
      if (s.h_enter != cursor) problems.push_back(who + "gap or overlap at " + std::to_string(s.h_enter));
      if (s.h_exit <= s.h_enter && length > 1) problems.push_back(who + "empty window at " + std::to_string(s.h_enter));
      if (k > 0) {
        const Segment& prev = *segs[k - 1].first;
        if (distance(prev.pos_exit, s.pos_enter) > 1e-9) problems.push_back(who + "handoff points differ");
        if (segs[k - 1].second == segs[k].second) problems.push_back(who + "consecutive segments share a region");
      }
      const int end = k + 1 == segs.size() ? s.h_exit + 1 : s.h_exit;
      for (int h = s.h_enter; h < end; ++h) {
        if (h < 0 || h >= length) continue;
        if (owner[std::size_t(h)] >= 0)
          problems.push_back(who + "step " + std::to_string(h) + " claimed by two regions");
        owner[std::size_t(h)] = segs[k].second;
      }
      cursor = s.h_exit;
    }
    if (cursor != length - 1) problems.push_back(who + "windows end at " + std::to_string(cursor));
    for (int h = 0; h < length; ++h)
      if (owner[std::size_t(h)] < 0) {
        problems.push_back(who + "step " + std::to_string(h) + " unowned");
        break;
      }
  }
  return problems;
}

}  // namespace dgd::assign
