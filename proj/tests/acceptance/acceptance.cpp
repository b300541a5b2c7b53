// One PASS/FAIL line per criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "dgd/harness.hpp"
#include "dgd/io.hpp"
#include "mapf_oracle.hpp"
#include "partition_check.hpp"
#include "repair_corpus.hpp"

using namespace dgd;
using geometry::Box;
using geometry::Disk;
using geometry::Polygon;
using geometry::Workspace;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;
std::map<int, std::string> lines;

void report(int id, bool pass, const std::string& detail) {
  const std::string line = std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + detail;
  std::cerr << line << std::endl;
  lines[id] = line;
  failures += !pass;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// --- 1 ---------------------------------------------------------------------

Workspace fuzz_workspace(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-0.9, 0.9), size(0.04, 0.25), ang(0, std::numbers::pi);
  Workspace ws{Box{{-1, -1}, {1, 1}}, {}};
  const int budget = 4 + int(rng() % 37);
  int used = 0;
  while (true) {
    const int kind = int(rng() % 3);
    const int verts = kind == 1 ? 3 : 4;
    if (used + verts > budget) break;
    const Vec2 c{pos(rng), pos(rng)};
    const double a = size(rng), b = size(rng), th = ang(rng);
    std::vector<Vec2> v;
    if (kind == 0) {
      v = {{c.x - a / 2, c.y - a / 2}, {c.x + a / 2, c.y - a / 2}, {c.x + a / 2, c.y + a / 2}, {c.x - a / 2, c.y + a / 2}};
    } else if (kind == 1) {
      for (int k = 0; k < 3; ++k) {
        const double phi = th + 2 * std::numbers::pi * k / 3;
        v.push_back(c + Vec2{std::cos(phi), std::sin(phi)} * (k == 0 ? a : b));
      }
    } else {
      const Vec2 u{std::cos(th), std::sin(th)}, n{-u.y, u.x};
      const Vec2 hu = u * (a / 2), hn = n * (b / 4);
      v = {c - hu - hn, c + hu - hn, c + hu + hn, c - hu + hn};
    }
    for (auto& p : v) p = {std::clamp(p.x, -1.0, 1.0), std::clamp(p.y, -1.0, 1.0)};
    if (std::abs(oracle::shoelace(v)) < 1e-4) continue;
    if (oracle::shoelace(v) < 0) std::reverse(v.begin(), v.end());
    ws.obstacles.push_back(Polygon{v});
    used += verts;
  }
  return ws;
}

void criterion1() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  int pass = 0, errors = 0;
  std::string first;
  for (int k = 0; k < 100; ++k) {
    const Workspace ws = fuzz_workspace(rng);
    try {
      const auto part = decomp::pbd(ws, {}, 0.0);
      const auto rep = oracle::check_partition(part.regions, ws);
      if (rep.ok() && !part.regions.empty())
        ++pass;
      else if (first.empty())
        first = "workspace " + std::to_string(k) + ": " + rep.detail;
    } catch (const std::exception& e) {
      ++errors;
      if (first.empty()) first = "workspace " + std::to_string(k) + " threw: " + e.what();
    }
  }
  const double t = seconds_since(t0);
  report(1, pass == 100 && t < 60.0,
         std::to_string(pass) + "/100 partitions sound, " + fmt(t) + " s" + (first.empty() ? "" : "; " + first));
}

// --- 2 ---------------------------------------------------------------------

void criterion2() {
  std::string detail;
  bool ok = true;
  for (auto kind : {harness::MapKind::kRoom, harness::MapKind::kShelf}) {
    int met = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto sc = harness::gen_map(kind, s);
      const auto part = decomp::pbd(geometry::FreeSpace(sc.workspace, sc.limits.robot_radius), {});
      const double ratio = double(part.regions.size()) / double(part.triangle_count);
      worst = std::max(worst, ratio);
      met += ratio <= 0.70;
    }
    ok &= met >= 8;
    detail += harness::to_string(kind) + " " + std::to_string(met) + "/10 (worst ratio " + fmt(worst) + ") ";
  }
  report(2, ok, detail);
}

// --- 3 ---------------------------------------------------------------------

void criterion3() {
  std::mt19937_64 rng(303);
  int solvable = 0, clean = 0, within = 0;
  while (solvable < 200) {
    const int nx = 2 + int(rng() % 5), ny = 2 + int(rng() % 5);
    const auto g = mapf::GridGraph::from_mask(oracle::random_mask(rng, nx, ny, 0.25));
    const int n = 1 + int(rng() % 4);
    if (g.size() < n + 1) continue;
    std::vector<int> cells(static_cast<std::size_t>(g.size()));
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    const std::vector<int> starts(cells.begin(), cells.begin() + n);
    std::shuffle(cells.begin(), cells.end(), rng);
    const std::vector<int> goals(cells.begin(), cells.begin() + n);
    std::vector<std::vector<int>> adj;
    for (int v = 0; v < g.size(); ++v) adj.push_back(g.neighbors(v));
    const auto opt = oracle::joint_optimum(adj, starts, goals);
    if (!opt || !opt->solvable) continue;
    ++solvable;
    try {
      const auto plan = mapf::solve_mapf(g, starts, goals);
      bool shape = plan.paths.size() == starts.size();
      for (std::size_t i = 0; shape && i < plan.paths.size(); ++i) {
        const auto& p = plan.paths[i];
        shape = int(p.size()) == plan.makespan + 1 && p.front() == starts[i] && p.back() == goals[i];
      }
      if (shape && mapf::validate_plan(plan, &g).empty()) {
        ++clean;
        within += plan.sum_of_costs() <= 1.5 * opt->sum_of_costs;
      }
    } catch (const Error&) {
    }
  }
  report(3, clean == 200 && within >= 190,
         std::to_string(clean) + "/200 conflict-free, " + std::to_string(within) + "/200 within 1.5x of optimum");
}

// --- 6 ---------------------------------------------------------------------

double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

void criterion6() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-1, 1);
  const double eps = 1e-6, r_agent = 0.08;
  int configs = 0, bad = 0;
  double worst = 0.0;
  while (configs < 100) {
    std::vector<diffusion::Obstacle> obs;
    obs.push_back(Disk{{u(rng) * 0.5, u(rng) * 0.5}, 0.1 + 0.1 * std::abs(u(rng))});
    {
      const Vec2 c{u(rng) * 0.5, u(rng) * 0.5};
      std::vector<Vec2> v;
      const int m = 3 + int(rng() % 3);
      const double rad = 0.15 + 0.1 * std::abs(u(rng));
      for (int k = 0; k < m; ++k) {
        const double phi = 2 * std::numbers::pi * (k + 0.3 * u(rng)) / m;
        v.push_back(c + Vec2{std::cos(phi), std::sin(phi)} * rad);
      }
      obs.push_back(Polygon{v});
    }
    const std::vector<double> margins = diffusion::obstacle_margins(obs, 0.05 + 0.1 * std::abs(u(rng)));
    Path p;
    std::vector<Path> others(2);
    for (int h = 0; h < 8; ++h) {
      p.push_back({u(rng) * 0.7, u(rng) * 0.7});
      for (auto& o : others) o.push_back(p.back() + Vec2{u(rng), u(rng)} * 0.08);
    }
    // stay 1e-3 away from hinge kinks, polygon boundaries and coincident points
    bool kink = false;
    for (const auto& w : p)
      for (std::size_t k = 0; k < obs.size(); ++k) {
        const double d = diffusion::obstacle_distance(obs[k], w);
        kink |= std::abs(d - margins[k]) < 1e-3 || std::abs(d) < 1e-3;
      }
    for (std::size_t h = 0; h < p.size(); ++h)
      for (const auto& o : others) kink |= std::abs(distance(p[h], o[h]) - r_agent) < 1e-3 || distance(p[h], o[h]) < 1e-3;
    if (kink) continue;
    ++configs;
    const auto go = diffusion::grad_penalty_obstacle(p, obs, margins);
    const auto ga = diffusion::grad_penalty_agents(p, others, r_agent);
    bool ok = true;
    for (std::size_t h = 0; h < p.size(); ++h)
      for (int axis = 0; axis < 2; ++axis) {
        Path plus = p, minus = p;
        (axis ? plus[h].y : plus[h].x) += eps;
        (axis ? minus[h].y : minus[h].x) -= eps;
        const double fo =
            (diffusion::penalty_obstacle(plus, obs, margins) - diffusion::penalty_obstacle(minus, obs, margins)) / (2 * eps);
        const double fa =
            (diffusion::penalty_agents(plus, others, r_agent) - diffusion::penalty_agents(minus, others, r_agent)) /
            (2 * eps);
        const double e = std::max(rel_err(axis ? go[h].y : go[h].x, fo), rel_err(axis ? ga[h].y : ga[h].x, fa));
        worst = std::max(worst, e);
        ok &= e <= 1e-4;
      }
    bad += !ok;
  }
  report(6, bad == 0, std::to_string(100 - bad) + "/100 configurations match, worst relative error " + fmt(worst));
}

// --- 7 ---------------------------------------------------------------------

void criterion7() {
  const auto lim = corpus::crossing_limits();
  const Workspace box{Box{{0, 0}, {1, 1}}, {}};
  int converged = 0, infeasible = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = corpus::crossing_instance(seed);
    repair::AlmTrace trace;
    try {
      const auto y = repair::alm_project(x, lim, repair::AlmConfig{}, &trace);
      std::vector<diffusion::TimedPath> timed;
      for (const auto& p : y.trajs) timed.push_back({0, p});
      const bool small = repair::constraint_residual(timed, lim) <= 1e-6 && !trace.residual.empty() &&
                         trace.residual.back() <= 1e-6 && trace.residual.size() <= 20;
      const bool feasible = repair::check_feasibility(y, lim, box).empty();
      infeasible += !feasible;
      converged += small && feasible;
    } catch (const RepairFailed&) {
    }
  }
  report(7, converged >= 19 && infeasible == 0,
         std::to_string(converged) + "/20 converged within 20 outer iterations, " + std::to_string(infeasible) +
             " returned infeasible");
}

// --- 4, 5, 8, 9, 10 --------------------------------------------------------

struct Instance {
  harness::Scenario scenario;
  harness::RunResult result;
};

// Independent tiling oracle: consecutive windows per robot chain from 0 to length - 1.
bool tiles(const std::vector<assign::Subproblem>& subs, int robots, int length) {
  std::vector<std::vector<std::pair<int, int>>> windows(static_cast<std::size_t>(robots));
  for (const auto& s : subs)
    for (const auto& seg : s.segments) {
      if (seg.robot < 0 || seg.robot >= robots) return false;
      if (int(seg.waypoints.size()) != seg.h_exit - seg.h_enter + 1) return false;
      windows[static_cast<std::size_t>(seg.robot)].push_back({seg.h_enter, seg.h_exit});
    }
  for (auto& w : windows) {
    std::sort(w.begin(), w.end());
    if (w.empty() || w.front().first != 0 || w.back().second != length - 1) return false;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k].second <= w[k].first) return false;
      if (k > 0 && w[k].first != w[k - 1].second) return false;
    }
  }
  return true;
}

double outside_distance(const Polygon& poly, const Vec2& p) {
  const auto& v = poly.vertices;
  const double sign = oracle::shoelace(v) >= 0 ? 1.0 : -1.0;
  double worst = -1e300;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec2 a = v[k], b = v[(k + 1) % v.size()];
    const Vec2 e = b - a;
    worst = std::max(worst, -sign * oracle::turn(a, b, p) / std::hypot(e.x, e.y));
  }
  return worst;
}

double terminal_penalty(const assign::Subproblem& sub, const std::vector<Path>& trajs,
                        std::span<const diffusion::Obstacle> obs) {
  const auto margins = diffusion::obstacle_margins(obs, sub.limits.r_obs);
  double total = 0.0;
  std::vector<diffusion::TimedPath> timed;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    total += diffusion::penalty_obstacle(trajs[k], obs, margins);
    timed.push_back({sub.segments[k].h_enter, trajs[k]});
  }
  return total + diffusion::penalty_agents_timed(timed, sub.limits.r_agent);
}

void end_to_end(const std::shared_ptr<const diffusion::ScoreModel>& model) {
  harness::PipelineConfig cfg;
  cfg.model = model;
  std::vector<Instance> runs;
  std::string detail8;
  bool ok8 = true;
  for (auto [kind, need] : {std::pair{harness::MapKind::kBasic, 0.9}, std::pair{harness::MapKind::kDense, 0.8}}) {
    int succ = 0;
    double time = 0.0;
    std::string causes;
    for (int k = 0; k < 25; ++k) {
      const auto tmpl = harness::gen_map(kind, harness::instance_seed(0, kind, 6, k));
      const auto sc = harness::place_robots(tmpl, 6, harness::default_radius(kind), harness::derive_seed(tmpl.seed, 1));
      auto res = harness::run_pipeline(sc, cfg);
      succ += res.success;
      time += res.wall_time;
      if (!res.success) causes += " " + res.cause;
      runs.push_back({sc, std::move(res)});
    }
    const double mean_time = time / 25;
    const bool ok = succ >= need * 25 && (kind != harness::MapKind::kBasic || mean_time <= 120.0);
    ok8 &= ok;
    detail8 += harness::to_string(kind) + " " + std::to_string(succ) + "/25 succeeded, mean " + fmt(mean_time) + " s" +
               (causes.empty() ? "" : " (failed:" + causes + ")") + "; ";
  }

  // 4
  int tiled = 0, with_plan = 0;
  for (const auto& r : runs) {
    const auto& a = r.result.artifacts;
    if (a.subproblems.empty()) continue;
    ++with_plan;
    const int robots = int(r.scenario.starts.size());
    const int length = int(a.embedded.front().size() - 1) * a.substeps + 1;
    tiled += tiles(a.subproblems, robots, length) && assign::check_tiling(a.subproblems, robots, length).empty();
  }
  report(4, with_plan == int(runs.size()) && tiled == with_plan,
         std::to_string(tiled) + "/" + std::to_string(runs.size()) + " instances tile exactly");

  // 5
  int subs = 0, contained = 0;
  double worst = -1e300;
  for (const auto& r : runs) {
    const auto& a = r.result.artifacts;
    for (std::size_t k = 0; k < a.sampled.size(); ++k) {
      if (a.sampled[k].empty()) continue;
      ++subs;
      double w = -1e300;
      for (const auto& path : a.sampled[k])
        for (const auto& p : path) w = std::max(w, outside_distance(a.subproblems[k].polygon, p));
      worst = std::max(worst, w);
      contained += w <= 1e-9;
    }
  }
  // top up with plain basic instances until 1000 subproblems have been sampled
  for (int k = 0; subs < 1000 && k < 400; ++k) {
    const auto tmpl = harness::gen_map(harness::MapKind::kBasic, harness::derive_seed(5005, std::uint64_t(k)));
    const auto sc = harness::place_robots(tmpl, 8, 0.04, harness::derive_seed(tmpl.seed, 1));
    const auto res = harness::run_pipeline(sc, cfg);
    const auto& a = res.artifacts;
    for (std::size_t j = 0; j < a.sampled.size(); ++j) {
      if (a.sampled[j].empty()) continue;
      ++subs;
      double w = -1e300;
      for (const auto& path : a.sampled[j])
        for (const auto& p : path) w = std::max(w, outside_distance(a.subproblems[j].polygon, p));
      worst = std::max(worst, w);
      contained += w <= 1e-9;
    }
  }
  report(5, subs >= 1000 && contained == subs,
         std::to_string(contained) + "/" + std::to_string(subs) + " sampled subproblems contained, max signed distance " +
             fmt(worst));

  report(8, ok8, detail8);

  // 9
  int pairs = 0, wins = 0, strict = 0;
  double warm_sum = 0.0, cold_sum = 0.0;
  for (const auto& r : runs) {
    const auto& a = r.result.artifacts;
    for (std::size_t k = 0; k < a.subproblems.size() && pairs < 20; ++k) {
      const auto& sub = a.subproblems[k];
      if (sub.segments.size() < 2) continue;
      double warm = 0.0, cold = 0.0;
      for (std::uint64_t s = 0; s < 4; ++s) {
        diffusion::SamplerConfig sc = cfg.sampler;
        sc.seed = harness::derive_seed(9009, std::uint64_t(pairs) * 16 + s);
        sc.warm_start = true;
        warm += terminal_penalty(sub, diffusion::sample_subproblem(sub, *model, sc, r.scenario.workspace.obstacles),
                                 r.scenario.workspace.obstacles);
        sc.warm_start = false;
        cold += terminal_penalty(sub, diffusion::sample_subproblem(sub, *model, sc, r.scenario.workspace.obstacles),
                                 r.scenario.workspace.obstacles);
      }
      ++pairs;
      warm_sum += warm / 4;
      cold_sum += cold / 4;
      wins += warm <= cold;
      strict += warm < cold;
    }
  }
  report(9, pairs == 20 && wins >= 15,
         std::to_string(wins) + "/" + std::to_string(pairs) + " pairs with warm start no worse (" + std::to_string(strict) +
             " strictly better), mean d_o + d_a " + fmt(warm_sum / std::max(pairs, 1)) + " warm vs " +
             fmt(cold_sum / std::max(pairs, 1)) + " noise");

  // 10
  int robots = 0, below = 0;
  for (const auto& r : runs) {
    if (!r.result.success) continue;
    for (double p : r.result.path_ratio) {
      ++robots;
      below += !(p >= 1.0);
    }
  }
  Path straight;
  for (int h = 0; h < 30; ++h) straight.push_back(Vec2{0.1, 0.2} + Vec2{0.03, 0.04} * h);
  const double P = harness::metric_path_ratio(straight, straight.front(), straight.back());
  const double A = harness::metric_acceleration(straight, 0.2);
  report(10, robots > 0 && below == 0 && std::abs(P - 1.0) <= 1e-9 && std::abs(A) <= 1e-9,
         std::to_string(robots - below) + "/" + std::to_string(robots) + " robots with P >= 1; straight line P - 1 = " +
             fmt(P - 1.0) + ", A = " + fmt(A));
}

// --- 11 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

void criterion11(const diffusion::ScoreModel& model) {
  const fs::path dir = fs::temp_directory_path() / "dgd_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = DGD_CLI;
  const std::string d = dir.string() + "/";
  model.save(d + "model.json");
  {
    std::ofstream suite(d + "suite.json");
    suite << R"({"maps":["basic","dense"],"robots":[3],"instances":3,"seed":11,"model":"model.json"})";
  }
  bool ok = sh(cli + " gen --kind basic --seed 4 --robots 6 --map-out " + d + "map.json --scenario-out " + d +
               "scen.json") == 0;
  std::string detail;
  for (int run = 0; run < 2 && ok; ++run) {
    const std::string tag = std::to_string(run);
    const int plan_rc = sh(cli + " plan --map " + d + "map.json --scenario " + d + "scen.json --model " + d +
                           "model.json --seed 2 --out " + d + "plan" + tag + ".json");
    const int bench_rc = sh(cli + " bench --suite " + d + "suite.json --out " + d + "bench" + tag + ".csv");
    ok &= bench_rc == 0 && (plan_rc == 0 || plan_rc == 2);
  }
  if (!ok) {
    report(11, false, "CLI invocation failed");
    return;
  }
  const auto p0 = slurp(d + "plan0.json"), p1 = slurp(d + "plan1.json");
  const auto b0 = slurp(d + "bench0.csv"), b1 = slurp(d + "bench1.csv");
  const bool has_traj = io::json::parse(p0).at("trajectories").size() == 6;
  report(11, has_traj && p0 == p1 && !b0.empty() && b0 == b1,
         std::string("plan JSON ") + (p0 == p1 ? "identical" : "differs") + " (" + std::to_string(p0.size()) +
             " bytes), bench CSV " + (b0 == b1 ? "identical" : "differs") + " (" + std::to_string(b0.size()) + " bytes)");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion1();
  criterion2();
  criterion3();
  criterion6();
  criterion7();
  const auto model = std::make_shared<const diffusion::ScoreModel>(harness::default_model(0));
  end_to_end(model);
  criterion11(*model);
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  std::cout << "total " << fmt(seconds_since(t0)) << " s, " << failures << " failed" << std::endl;
  return failures;
}
