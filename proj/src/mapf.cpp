#include "dgd/mapf.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <optional>
#include <tuple>
#include <deque>
#include <numeric>
#include <queue>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace dgd::mapf {

GridGraph::GridGraph(Vec2 origin, double cell_size, int nx, int ny)
    : origin_(origin), cell_size_(cell_size), nx_(nx), ny_(ny), index_(std::size_t(nx) * ny, -1) {}

GridGraph GridGraph::from_mask(const std::vector<std::string>& rows, double cell_size, Vec2 origin) {
  const int ny = int(rows.size());
  const int nx = ny ? int(rows[0].size()) : 0;
  GridGraph g(origin, cell_size, nx, ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      if (rows[std::size_t(iy)][std::size_t(ix)] == '.') g.add_vertex({ix, iy});
  for (int v = 0; v < g.size(); ++v) {
    const Cell c = g.cell(v);
    for (const Cell d : {Cell{c.ix + 1, c.iy}, Cell{c.ix, c.iy + 1}}) {
      const int u = g.vertex_at(d);
      if (u >= 0) g.add_edge(v, u);
    }
  }
  return g;
}

int GridGraph::add_vertex(Cell c) {
  const int id = int(cells_.size());
  cells_.push_back(c);
  adj_.emplace_back();
  index_.at(std::size_t(c.iy) * nx_ + c.ix) = id;
  return id;
}

void GridGraph::add_edge(int u, int v) {
  auto& a = adj_.at(std::size_t(u));
  auto& b = adj_.at(std::size_t(v));
  a.insert(std::upper_bound(a.begin(), a.end(), v), v);
  b.insert(std::upper_bound(b.begin(), b.end(), u), u);
  ++edges_;
}

bool GridGraph::adjacent(int u, int v) const {
  const auto& a = neighbors(u);
  return std::binary_search(a.begin(), a.end(), v);
}

int GridGraph::vertex_at(Cell c) const {
  if (c.ix < 0 || c.iy < 0 || c.ix >= nx_ || c.iy >= ny_) return -1;
  return index_[std::size_t(c.iy) * nx_ + c.ix];
}

Vec2 GridGraph::center(Cell c) const {
  return origin_ + Vec2{(c.ix + 0.5) * cell_size_, (c.iy + 0.5) * cell_size_};
}

Vec2 GridGraph::embed(int v) const {
  if (v < 0 || v >= size()) throw UnknownVertex("vertex " + std::to_string(v));
  return center(cells_[std::size_t(v)]);
}

int GridGraph::snap(const Vec2& p) const {
  int best = -1;
  double bd = 0.0;
  for (int v = 0; v < size(); ++v) {
    const double d = distance(p, embed(v));
    if (best < 0 || d < bd) {
      best = v;
      bd = d;
    }
  }
  if (best < 0) throw NoFreeCells("empty grid");
  return best;
}

std::vector<int> GridGraph::components() const {
  std::vector<int> label(cells_.size(), -1);
  int next = 0;
  for (int s = 0; s < size(); ++s) {
    if (label[std::size_t(s)] >= 0) continue;
    std::deque<int> q{s};
    label[std::size_t(s)] = next;
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      for (int u : neighbors(v))
        if (label[std::size_t(u)] < 0) {
          label[std::size_t(u)] = next;
          q.push_back(u);
        }
    }
    ++next;
  }
  return label;
}

std::vector<int> GridGraph::distances_to(int goal) const {
  std::vector<int> dist(cells_.size(), -1);
  std::deque<int> q{goal};
  dist.at(std::size_t(goal)) = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (int u : neighbors(v))
      if (dist[std::size_t(u)] < 0) {
        dist[std::size_t(u)] = dist[std::size_t(v)] + 1;
        q.push_back(u);
      }
  }
  return dist;
}

GridGraph build_grid(const geometry::FreeSpace& fs, double cell_size) {
  if (!(cell_size > 0)) throw InvalidInput("cell_size must be positive");
  const auto& b = fs.workspace().bounds;
  const int nx = int(std::floor(b.width() / cell_size + 1e-9));
  const int ny = int(std::floor(b.height() / cell_size + 1e-9));
  GridGraph g(b.min, cell_size, nx, ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      if (fs.contains(g.center({ix, iy}))) g.add_vertex({ix, iy});
  if (g.size() == 0) throw NoFreeCells("no cell centre lies in free space");
  for (int v = 0; v < g.size(); ++v) {
    const Cell c = g.cell(v);
    for (const Cell d : {Cell{c.ix + 1, c.iy}, Cell{c.ix, c.iy + 1}}) {
      const int u = g.vertex_at(d);
      if (u >= 0 && fs.segment_free(g.embed(v), g.embed(u))) g.add_edge(v, u);
    }
  }
  return g;
}

GridGraph build_grid(const geometry::Workspace& ws, double cell_size, double robot_radius) {
  if (robot_radius < 0) throw InvalidInput("negative robot radius");
  return build_grid(geometry::FreeSpace(ws, robot_radius), cell_size);
}

int DiscretePlan::sum_of_costs() const {
  int total = 0;
  for (const auto& p : paths) {
    int t = int(p.size()) - 1;
    while (t > 0 && p[std::size_t(t - 1)] == p.back()) --t;
    total += t;
  }
  return total;
}

namespace {

std::uint64_t vkey(int v, int t) { return (std::uint64_t(t) << 32) | std::uint32_t(v); }
std::uint64_t ekey(int u, int v, int t) {
  return (std::uint64_t(t) << 42) | (std::uint64_t(u) << 21) | std::uint64_t(v);
}

struct Constraints {
  std::unordered_set<std::uint64_t> vertex;
  std::unordered_set<std::uint64_t> edge;  // move u -> v starting at t
  std::vector<int> blocked_from;           // per vertex, permanent from this time
  std::vector<int> last_use;               // per vertex, last constrained time
  int max_time = 0;

  explicit Constraints(int n) : blocked_from(std::size_t(n), INT_MAX), last_use(std::size_t(n), -1) {}

  void forbid_vertex(int v, int t) {
    vertex.insert(vkey(v, t));
    last_use[std::size_t(v)] = std::max(last_use[std::size_t(v)], t);
    max_time = std::max(max_time, t);
  }
  void forbid_edge(int u, int v, int t) {
    edge.insert(ekey(u, v, t));
    max_time = std::max(max_time, t + 1);
  }
  bool vertex_ok(int v, int t) const {
    return t < blocked_from[std::size_t(v)] && !vertex.count(vkey(v, t));
  }
  bool edge_ok(int u, int v, int t) const { return !edge.count(ekey(u, v, t)); }
};

std::vector<int> space_time_astar(const GridGraph& g, int start, int goal, const std::vector<int>& h,
                                  const Constraints& c, int max_t) {
  if (h[std::size_t(start)] < 0 || c.blocked_from[std::size_t(goal)] != INT_MAX) return {};
  if (!c.vertex_ok(start, 0)) return {};
  const int earliest = c.last_use[std::size_t(goal)] + 1;

  struct Node {
    int v, t, g, parent;
  };
  std::vector<Node> nodes;
  struct Entry {
    int f, g, id;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.id > b.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  std::unordered_set<std::uint64_t> closed;

  nodes.push_back({start, 0, 0, -1});
  open.push({h[std::size_t(start)], 0, 0});
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    const Node n = nodes[std::size_t(e.id)];
    if (!closed.insert(vkey(n.v, n.t)).second) continue;
    if (n.v == goal && n.t >= earliest) {
      std::vector<int> path;
      for (int id = e.id; id >= 0; id = nodes[std::size_t(id)].parent)
        path.push_back(nodes[std::size_t(id)].v);
      std::reverse(path.begin(), path.end());
      return path;
    }
    if (n.t >= max_t) continue;
    auto expand = [&](int u) {
      const int t = n.t + 1;
      if (h[std::size_t(u)] < 0 || !c.vertex_ok(u, t) || !c.edge_ok(n.v, u, n.t)) return;
      if (closed.count(vkey(u, t))) return;
      nodes.push_back({u, t, n.g + 1, e.id});
      const int hh = std::max(h[std::size_t(u)], u == goal ? std::max(0, earliest - t) : 0);
      open.push({n.g + 1 + hh, n.g + 1, int(nodes.size()) - 1});
    };
    expand(n.v);
    for (int u : g.neighbors(n.v)) expand(u);
  }
  return {};
}

int path_cost(const std::vector<int>& p) {
  int t = int(p.size()) - 1;
  while (t > 0 && p[std::size_t(t - 1)] == p.back()) --t;
  return t;
}

DiscretePlan finish(std::vector<std::vector<int>> paths, const std::vector<int>& starts,
                    const std::vector<int>& goals) {
  DiscretePlan plan;
  std::size_t len = 1;
  for (auto& p : paths) {
    p.resize(std::size_t(path_cost(p)) + 1);
    len = std::max(len, p.size());
  }
  for (auto& p : paths) p.resize(len, p.back());
  plan.paths = std::move(paths);
  plan.makespan = int(len) - 1;
  plan.starts = starts;
  plan.goals = goals;
  return plan;
}

std::optional<std::vector<std::vector<int>>> prioritized(const GridGraph& g, const std::vector<int>& starts,
                                                         const std::vector<int>& goals,
                                                         const std::vector<std::vector<int>>& h,
                                                         const std::vector<int>& order, int max_t) {
  Constraints res(g.size());
  // start cells of unplanned robots stay occupied until they are planned
  std::vector<std::vector<int>> paths(starts.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int i = order[k];
    Constraints local = res;
    for (std::size_t m = k + 1; m < order.size(); ++m) local.forbid_vertex(starts[std::size_t(order[m])], 0);
    auto p = space_time_astar(g, starts[std::size_t(i)], goals[std::size_t(i)], h[std::size_t(i)], local, max_t);
    if (p.empty()) return std::nullopt;
    for (std::size_t t = 0; t < p.size(); ++t) {
      res.forbid_vertex(p[t], int(t));
      if (t + 1 < p.size()) res.forbid_edge(p[t + 1], p[t], int(t));
    }
    res.blocked_from[std::size_t(p.back())] = int(p.size()) - 1;
    paths[std::size_t(i)] = std::move(p);
  }
  return paths;
}

struct FoundConflict {
  bool vertex = true;
  int i = -1, j = -1, t = 0, u = 0, v = 0;
};

int at(const std::vector<int>& p, int t) { return p[std::size_t(std::min<int>(t, int(p.size()) - 1))]; }

std::optional<FoundConflict> first_conflict(const std::vector<std::vector<int>>& paths) {
  int horizon = 0;
  for (const auto& p : paths) horizon = std::max(horizon, int(p.size()));
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < paths.size(); ++i)
      for (std::size_t j = i + 1; j < paths.size(); ++j) {
        const int a = at(paths[i], t), b = at(paths[j], t);
        if (a == b) return FoundConflict{true, int(i), int(j), t, a, a};
        if (t + 1 < horizon) {
          const int a1 = at(paths[i], t + 1), b1 = at(paths[j], t + 1);
          if (a != a1 && a == b1 && b == a1) return FoundConflict{false, int(i), int(j), t, a, a1};
        }
      }
  }
  return std::nullopt;
}

std::optional<std::vector<std::vector<int>>> cbs(const GridGraph& g, const std::vector<int>& starts,
                                                 const std::vector<int>& goals,
                                                 const std::vector<std::vector<int>>& h, int max_t,
                                                 int budget) {
  const std::size_t n = starts.size();
  struct Node {
    std::vector<Constraints> cons;
    std::vector<std::vector<int>> paths;
    int cost = 0;
  };
  std::vector<Node> nodes;
  Node root{std::vector<Constraints>(n, Constraints(g.size())), {}, 0};
  for (std::size_t i = 0; i < n; ++i) {
    auto p = space_time_astar(g, starts[i], goals[i], h[i], root.cons[i], max_t);
    if (p.empty()) return std::nullopt;
    root.cost += path_cost(p);
    root.paths.push_back(std::move(p));
  }
  using Entry = std::pair<int, int>;  // cost, id
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  nodes.push_back(std::move(root));
  open.push({nodes.back().cost, 0});
  while (!open.empty() && int(nodes.size()) < budget) {
    const int id = open.top().second;
    open.pop();
    const auto conflict = first_conflict(nodes[std::size_t(id)].paths);
    if (!conflict) return nodes[std::size_t(id)].paths;
    for (int side = 0; side < 2; ++side) {
      Node child = nodes[std::size_t(id)];
      const int a = side == 0 ? conflict->i : conflict->j;
      auto& c = child.cons[std::size_t(a)];
      if (conflict->vertex)
        c.forbid_vertex(conflict->u, conflict->t);
      else if (side == 0)
        c.forbid_edge(conflict->u, conflict->v, conflict->t);
      else
        c.forbid_edge(conflict->v, conflict->u, conflict->t);
      auto p = space_time_astar(g, starts[std::size_t(a)], goals[std::size_t(a)], h[std::size_t(a)], c, max_t);
      if (p.empty()) continue;
      child.cost += path_cost(p) - path_cost(child.paths[std::size_t(a)]);
      child.paths[std::size_t(a)] = std::move(p);
      nodes.push_back(std::move(child));
      open.push({nodes.back().cost, int(nodes.size()) - 1});
    }
  }
  return std::nullopt;
}


// Joint-state A* on sum of costs for tiny, congested instances. A robot on its
// goal may commit to staying there, after which it no longer costs anything.
std::optional<std::vector<std::vector<int>>> joint_search(const GridGraph& g, const std::vector<int>& starts,
                                                          const std::vector<int>& goals,
                                                          const std::vector<std::vector<int>>& h,
                                                          std::size_t budget) {
  const int n = int(starts.size());
  const std::uint64_t V = std::uint64_t(g.size());
  struct State {
    std::vector<int> pos;
    unsigned done;
    int g;
    int parent;
  };
  auto key = [&](const std::vector<int>& pos, unsigned done) {
    std::uint64_t k = done;
    for (int p : pos) k = k * V + std::uint64_t(p);
    return k;
  };
  auto heur = [&](const std::vector<int>& pos, unsigned done) {
    int s = 0;
    for (int i = 0; i < n; ++i)
      if (!(done >> i & 1u)) s += h[std::size_t(i)][std::size_t(pos[std::size_t(i)])];
    return s;
  };
  std::vector<State> states;
  std::unordered_map<std::uint64_t, int> best;
  using Entry = std::tuple<int, int, int>;  // f, -g, id
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  auto push = [&](std::vector<int> pos, unsigned done, int cost, int parent) {
    const auto k = key(pos, done);
    auto it = best.find(k);
    if (it != best.end() && it->second <= cost) return;
    best[k] = cost;
    const int f = cost + heur(pos, done);
    states.push_back({std::move(pos), done, cost, parent});
    open.push({f, -cost, int(states.size()) - 1});
  };
  push(starts, 0u, 0, -1);
  const unsigned all = (1u << n) - 1u;
  while (!open.empty() && states.size() < budget) {
    const auto [f, ng, id] = open.top();
    open.pop();
    const State cur = states[std::size_t(id)];
    if (best[key(cur.pos, cur.done)] < cur.g) continue;
    if (cur.done == all) {
      std::vector<std::vector<int>> paths(static_cast<std::size_t>(n));
      std::vector<int> chain;
      for (int s = id; s >= 0; s = states[std::size_t(s)].parent) chain.push_back(s);
      std::reverse(chain.begin(), chain.end());
      for (std::size_t k = 0; k < chain.size(); ++k) {
        const auto& st = states[std::size_t(chain[k])];
        // commit transitions keep positions, so skip repeated snapshots
        if (k > 0 && st.pos == states[std::size_t(chain[k - 1])].pos &&
            st.done != states[std::size_t(chain[k - 1])].done)
          continue;
        for (int i = 0; i < n; ++i) paths[std::size_t(i)].push_back(st.pos[std::size_t(i)]);
      }
      return paths;
    }
    for (int i = 0; i < n; ++i)
      if (!(cur.done >> i & 1u) && cur.pos[std::size_t(i)] == goals[std::size_t(i)])
        push(cur.pos, cur.done | (1u << i), cur.g, id);
    int active = 0;
    for (int i = 0; i < n; ++i) active += !(cur.done >> i & 1u);
    if (active == 0) continue;
    std::vector<int> nxt = cur.pos;
    auto rec = [&](auto&& self, int i) -> void {
      if (i == n) {
        push(nxt, cur.done, cur.g + active, id);
        return;
      }
      const int from = cur.pos[std::size_t(i)];
      std::vector<int> opts{from};
      if (!(cur.done >> i & 1u))
        for (int u : g.neighbors(from)) opts.push_back(u);
      for (int to : opts) {
        bool ok = true;
        for (int j = 0; j < i && ok; ++j)
          ok = nxt[std::size_t(j)] != to &&
               !(cur.pos[std::size_t(j)] == to && nxt[std::size_t(j)] == from && from != to);
        if (!ok) continue;
        nxt[std::size_t(i)] = to;
        self(self, i + 1);
      }
      nxt[std::size_t(i)] = from;
    };
    rec(rec, 0);
  }
  return std::nullopt;
}

}  // namespace

DiscretePlan solve_mapf(const GridGraph& g, const std::vector<int>& starts, const std::vector<int>& goals,
                        const MapfConfig& config) {
  if (starts.size() != goals.size()) throw InvalidInput("starts and goals differ in length");
  const std::size_t n = starts.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (starts[i] < 0 || starts[i] >= g.size() || goals[i] < 0 || goals[i] >= g.size())
      throw UnknownVertex("start or goal outside the grid");
    for (std::size_t j = 0; j < i; ++j)
      if (starts[i] == starts[j] || goals[i] == goals[j]) throw InvalidInput("starts and goals must be distinct");
  }
  std::vector<std::vector<int>> h;
  for (std::size_t i = 0; i < n; ++i) {
    h.push_back(g.distances_to(goals[i]));
    if (h.back()[std::size_t(starts[i])] < 0)
      throw Unsolvable("robot " + std::to_string(i) + " cannot reach its goal");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  for (int attempt = 0; attempt < std::max(1, config.restarts); ++attempt) {
    if (attempt > 0) std::shuffle(order.begin(), order.end(), rng);
    if (auto paths = prioritized(g, starts, goals, h, order, config.max_timesteps))
      return finish(std::move(*paths), starts, goals);
  }
  if (int(n) <= config.cbs_max_agents)
    if (auto paths = cbs(g, starts, goals, h, config.max_timesteps, config.cbs_node_budget))
      return finish(std::move(*paths), starts, goals);
  if (n <= 4 && std::pow(double(g.size()), double(n)) <= 2e7)
    if (auto paths = joint_search(g, starts, goals, h, config.joint_state_budget))
      return finish(std::move(*paths), starts, goals);
  throw Unsolvable("no conflict-free plan within the search budget");
}

std::vector<Conflict> validate_plan(const DiscretePlan& plan, const GridGraph* graph) {
  std::vector<Conflict> out;
  const auto& P = plan.paths;
  int horizon = 0;
  for (const auto& p : P) horizon = std::max(horizon, int(p.size()));
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < P.size(); ++i) {
      if (P[i].empty()) continue;
      if (graph && t + 1 < int(P[i].size())) {
        const int a = P[i][std::size_t(t)], b = P[i][std::size_t(t + 1)];
        if (a != b && !graph->adjacent(a, b)) out.push_back({"move", int(i), int(i), t});
      }
      for (std::size_t j = i + 1; j < P.size(); ++j) {
        if (P[j].empty()) continue;
        const int a = at(P[i], t), b = at(P[j], t);
        if (a == b) out.push_back({"vertex", int(i), int(j), t});
        if (t + 1 < horizon) {
          const int a1 = at(P[i], t + 1), b1 = at(P[j], t + 1);
          if (a != a1 && a == b1 && b == a1) out.push_back({"edge", int(i), int(j), t});
        }
      }
    }
  }
  return out;
}

std::vector<int> snap_distinct(const GridGraph& g, const geometry::FreeSpace& fs, const std::vector<Vec2>& points) {
  std::vector<int> order(std::size_t(g.size()));
  std::vector<bool> taken(std::size_t(g.size()), false);
  std::vector<int> out;
  for (const auto& p : points) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return distance(p, g.embed(a)) < distance(p, g.embed(b)); });
    int pick = -1;
    for (int v : order)
      if (!taken[std::size_t(v)] && fs.segment_free(p, g.embed(v))) {
        pick = v;
        break;
      }
    if (pick < 0) throw Unsolvable("no visible free grid vertex near an endpoint");
    taken[std::size_t(pick)] = true;
    out.push_back(pick);
  }
  return out;
}

}  // namespace dgd::mapf
