#include <doctest.h>

#include <chrono>
#include <random>

#include "dgd/decomposition.hpp"
#include "oracles.hpp"
#include "partition_check.hpp"

using namespace dgd;
using namespace dgd::geometry;
using namespace dgd::decomp;

namespace {

Polygon square(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

Workspace empty_2x2() { return Workspace{Box{{-1, -1}, {1, 1}}, {}}; }

Workspace random_workspace(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-0.9, 0.8);
  std::uniform_real_distribution<double> side(0.05, 0.1);
  std::uniform_int_distribution<int> count(0, 8);
  Workspace ws = empty_2x2();
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng), s = side(rng);
    ws.obstacles.push_back(square(x, y, x + s, y + s));
  }
  if (rng() % 2) ws.obstacles.push_back(Disk{{pos(rng), pos(rng)}, side(rng)});
  return ws;
}

// rotate so the lexicographically smallest vertex comes first
std::vector<Vec2> normalized(const Polygon& p) {
  auto v = p.vertices;
  auto it = std::min_element(v.begin(), v.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  std::rotate(v.begin(), it, v.end());
  return v;
}

// Occupancy-and-crossing count done by enumeration, with point membership
// decided by the half-plane test.
double traffic_oracle(const Polygon& r1, const Polygon& r2, const std::vector<Path>& plan) {
  auto inside = [](const Polygon& r, const Vec2& p) {
    for (std::size_t k = 0; k < r.size(); ++k)
      if (oracle::turn(r[k], r[(k + 1) % r.size()], p) < -1e-12) return false;
    return true;
  };
  double total = 0.0;
  for (const auto& path : plan) {
    for (std::size_t t = 0; t < path.size(); ++t) {
      const bool in1 = inside(r1, path[t]);
      const bool in2 = !in1 && inside(r2, path[t]);
      if (in1 || in2) total += 1;
      if (t == 0) continue;
      const bool p1 = inside(r1, path[t - 1]);
      const bool p2 = !p1 && inside(r2, path[t - 1]);
      if ((p1 && in2) || (p2 && in1)) total += 2;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("traffic_priority: examples") {
  const Polygon r1 = square(0, 0, 1, 1);
  const Polygon r2 = square(1, 0, 2, 1);
  const std::vector<Path> plan{{{0.2, 0.5}, {0.4, 0.5}, {0.6, 0.5}, {1.4, 0.5}, {1.6, 0.5}}};
  CHECK(traffic_oracle(r1, r2, plan) == 7.0);
  CHECK(traffic_priority(r1, r2, plan) == 7.0);

  const std::vector<Path> away{{{5, 5}, {6, 5}, {6, 6}}};
  CHECK(traffic_priority(r1, r2, away) == 0.0);

  const std::vector<Path> twice{plan[0], plan[0]};
  CHECK(traffic_priority(r1, r2, twice) == 14.0);
}

TEST_CASE("traffic_priority: agrees with enumeration on random walks") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.2, 2.2);
  const Polygon r1 = square(0, 0, 1, 1);
  const Polygon r2 = Polygon{{{1, 0}, {2, 0}, {1.5, 1}}};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Path> plan(3);
    for (auto& p : plan)
      for (int t = 0; t < 12; ++t) p.push_back({u(rng), u(rng) * 0.5});
    CHECK(traffic_priority(r1, r2, plan) == traffic_oracle(r1, r2, plan));
  }
}

TEST_CASE("build_adjacency: examples") {
  SUBCASE("split square") {
    const std::vector<Polygon> rs{Polygon{{{0, 0}, {1, 0}, {1, 1}}}, Polygon{{{0, 0}, {1, 1}, {0, 1}}}};
    const auto adj = build_adjacency(rs);
    CHECK(adj[0] == std::vector<int>{1});
    CHECK(adj[1] == std::vector<int>{0});
  }
  SUBCASE("vertex touch only") {
    const std::vector<Polygon> rs{square(0, 0, 1, 1), square(1, 1, 2, 2)};
    const auto adj = build_adjacency(rs);
    CHECK(adj[0].empty());
    CHECK(adj[1].empty());
  }
  SUBCASE("four quadrants") {
    const std::vector<Polygon> rs{square(0, 0, 1, 1), square(1, 0, 2, 1), square(0, 1, 1, 2),
                                  square(1, 1, 2, 2)};
    const auto adj = build_adjacency(rs);
    // enumeration: quadrants sharing an axis-aligned side
    for (int i = 0; i < 4; ++i) {
      std::vector<int> expect;
      for (int j = 0; j < 4; ++j) {
        const int dx = std::abs(i % 2 - j % 2), dy = std::abs(i / 2 - j / 2);
        if (dx + dy == 1) expect.push_back(j);
      }
      CHECK(adj[std::size_t(i)] == expect);
      CHECK(adj[std::size_t(i)].size() == 2);
    }
  }
  SUBCASE("partial edge overlap counts") {
    const std::vector<Polygon> rs{square(0, 0, 2, 1), square(1, 1, 3, 2)};
    const auto adj = build_adjacency(rs);
    CHECK(adj[0] == std::vector<int>{1});
  }
}

TEST_CASE("pbd: empty workspace is one region") {
  const std::vector<Path> plan{{{0, 0}, {0.5, 0.5}}};
  for (const auto& p : {std::vector<Path>{}, plan}) {
    const auto part = pbd(empty_2x2(), p);
    REQUIRE(part.regions.size() == 1);
    CHECK(oracle::shoelace(part.regions[0].vertices) == doctest::Approx(4.0));
    CHECK(part.adjacency[0].empty());
  }
}

TEST_CASE("pbd: square hole needs at least four regions") {
  Workspace ws = empty_2x2();
  ws.obstacles.push_back(square(-0.2, -0.2, 0.2, 0.2));
  const auto part = pbd(ws, {});
  CHECK(part.regions.size() >= 4);
  const auto rep = oracle::check_partition(part.regions, ws);
  CHECK_MESSAGE(rep.ok(), rep.detail);
  double total = 0;
  for (const auto& r : part.regions) total += oracle::shoelace(r.vertices);
  CHECK(total == doctest::Approx(4.0 - 0.16).epsilon(1e-9));
}

TEST_CASE("pbd: clearance shrinks the covered area") {
  Workspace ws = empty_2x2();
  ws.obstacles.push_back(square(-0.2, -0.2, 0.2, 0.2));
  const auto part = pbd(ws, {}, 0.04);
  for (const auto& r : part.regions)
    for (const auto& p : oracle::region_samples(r.vertices)) {
      CHECK(std::abs(p.x) <= 0.96 + 1e-9);
      CHECK(std::max(std::abs(p.x), std::abs(p.y)) >= 0.24 - 1e-9);
    }
}

TEST_CASE("pbd: fuzzed workspaces give valid partitions") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Workspace ws = random_workspace(rng);
    ConvexPartition part;
    try {
      part = pbd(ws, {});
    } catch (const DisconnectedFreeSpace&) {
      continue;
    }
    ++checked;
    const auto rep = oracle::check_partition(part.regions, ws);
    CHECK_MESSAGE(rep.ok(), "trial ", trial, ": ", rep.detail);
    CHECK(int(part.regions.size()) <= part.triangle_count);
    CHECK(part.merges == part.triangle_count - int(part.regions.size()));
    double total = 0;
    for (const auto& r : part.regions) total += oracle::shoelace(r.vertices);
    FreeSpace fs(ws, 0.0);
    double expect = 0;
    for (const auto& c : fs.components()) {
      expect += area(c.outer);
      for (const auto& h : c.holes) expect -= area(h);
    }
    CHECK(total == doctest::Approx(expect).epsilon(1e-9));
    // adjacency is symmetric
    for (std::size_t i = 0; i < part.adjacency.size(); ++i)
      for (int j : part.adjacency[i]) {
        const auto& back = part.adjacency[std::size_t(j)];
        CHECK(std::find(back.begin(), back.end(), int(i)) != back.end());
      }
  }
  CHECK(checked >= 90);
}

TEST_CASE("pbd: traffic plans still give valid partitions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    const Workspace ws = random_workspace(rng);
    std::vector<Path> plan(4);
    for (auto& p : plan)
      for (int t = 0; t < 10; ++t) p.push_back({u(rng), u(rng)});
    ConvexPartition part;
    try {
      part = pbd(ws, plan);
    } catch (const DisconnectedFreeSpace&) {
      continue;
    }
    CHECK(part.priority_mode == "traffic");
    const auto rep = oracle::check_partition(part.regions, ws);
    CHECK_MESSAGE(rep.ok(), rep.detail);
  }
}

TEST_CASE("pbd: obstacles touching the boundary or each other at a point") {
  std::vector<Workspace> cases;
  // vertex on the left wall
  cases.push_back(empty_2x2());
  cases.back().obstacles.push_back(Polygon{{{-1, 0.06}, {-0.858, -0.25}, {-0.678, 0.117}}});
  // rightmost hole vertex on the right wall
  cases.push_back(empty_2x2());
  cases.back().obstacles.push_back(Polygon{{{0.7646, 0.0288}, {0.6786, -0.3578}, {1, -0.2122}}});
  // corner touch, with a second obstacle bridged past it
  cases.push_back(empty_2x2());
  cases.back().obstacles.push_back(Polygon{{{-1, 1}, {-0.925, 0.757}, {-0.817, 0.830}}});
  cases.back().obstacles.push_back(Polygon{{{-0.904, 0.786}, {-0.720, 0.840}, {-0.735, 0.894}, {-0.920, 0.841}}});
  cases.back().obstacles.push_back(square(-0.924, -0.138, -0.694, 0.091));
  // two squares sharing a corner
  cases.push_back(empty_2x2());
  cases.back().obstacles.push_back(square(-0.4, -0.4, 0.0, 0.0));
  cases.back().obstacles.push_back(square(0.0, 0.0, 0.3, 0.3));
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Workspace& ws = cases[c];
    const auto part = pbd(ws, {});
    const auto rep = oracle::check_partition(part.regions, ws);
    CHECK_MESSAGE(rep.ok(), rep.detail);
    if (c == 2) continue;  // overlapping obstacles
    double area = 0.0;
    for (const auto& r : part.regions) area += oracle::shoelace(r.vertices);
    double blocked = 0.0;
    for (const auto& o : ws.obstacles) blocked += std::abs(oracle::shoelace(std::get<Polygon>(o).vertices));
    CHECK(area == doctest::Approx(4.0 - blocked).epsilon(1e-9));
  }
}

TEST_CASE("pbd: deterministic") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Workspace ws = random_workspace(rng);
    const std::vector<Path> plan{{{-0.9, -0.9}, {0.9, 0.9}}};
    try {
      const auto a = pbd(ws, plan);
      const auto b = pbd(ws, plan);
      REQUIRE(a.regions.size() == b.regions.size());
      for (std::size_t i = 0; i < a.regions.size(); ++i)
        CHECK(normalized(a.regions[i]) == normalized(b.regions[i]));
      CHECK(a.adjacency == b.adjacency);
    } catch (const DisconnectedFreeSpace&) {
    }
  }
}

TEST_CASE("pbd: stale heap entries are skipped") {
  Workspace ws = empty_2x2();
  ws.obstacles.push_back(square(-0.5, -0.5, -0.3, -0.3));
  ws.obstacles.push_back(square(0.3, 0.2, 0.45, 0.4));
  ws.obstacles.push_back(Disk{{0.0, 0.6}, 0.1});
  const auto part = pbd(ws, {});
  CHECK(part.stale_skipped > 0);
  CHECK(part.merges == part.triangle_count - int(part.regions.size()));
  CHECK(oracle::check_partition(part.regions, ws).ok());
}

TEST_CASE("pbd: comb polygon timing") {
  auto comb = [](int teeth) {
    Workspace ws{Box{{0, 0}, {double(teeth), 2}}, {}};
    for (int i = 0; i < teeth; ++i)
      ws.obstacles.push_back(square(i + 0.3, 0.5, i + 0.7, 2.0 + 1e-3));
    return ws;
  };
  auto time = [&](int teeth) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto part = pbd(comb(teeth), {});
    CHECK(oracle::check_partition(part.regions, comb(teeth)).ok());
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double a = time(20);
  const double b = time(40);
  MESSAGE("comb 20 teeth: ", a, " s, 40 teeth: ", b, " s, ratio ", b / a);
}
