#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "dgd/harness.hpp"

namespace dgd::harness {

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DGD_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1, int(std::thread::hardware_concurrency()));
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::clamp(workers, 1, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[std::size_t(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

diffusion::ScoreModel default_model(std::uint64_t seed, int samples, int epochs) {
  std::vector<geometry::Polygon> regions;
  const MapKind kinds[] = {MapKind::kBasic, MapKind::kDense, MapKind::kRoom, MapKind::kShelf};
  for (std::size_t k = 0; k < 4; ++k) {
    const Scenario sc = gen_map(kinds[k], derive_seed(seed, 1000 + k));
    const auto part = decomp::pbd(geometry::FreeSpace(sc.workspace, sc.limits.robot_radius), {});
    regions.insert(regions.end(), part.regions.begin(), part.regions.end());
  }
  const auto data = diffusion::make_training_set(regions, samples, seed);
  diffusion::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = 1e-3;
  cfg.seed = seed;
  return diffusion::train_score(data, cfg);
}

int substeps_for(double cell, const KinodynamicLimits& limits) {
  return std::max(1, int(std::ceil(3.0 * cell / limits.max_step() - 1e-9)));
}

namespace {

struct StageError : std::runtime_error {
  StageError(std::string stage, const std::string& what) : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

// Runs `fn`, tagging any exception with `stage`.
template <class F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Straight moves of at most `per_step` per MAPF step, padded with waits so
// every robot uses `steps` steps. `wait_first` puts the waits before the move.
Path lead(const Vec2& from, const Vec2& to, int own, int steps, bool wait_first) {
  Path p;
  if (wait_first)
    for (int k = 0; k < steps - own; ++k) p.push_back(from);
  for (int k = 1; k <= own; ++k) p.push_back(from + (to - from) * (double(k) / own));
  if (!wait_first)
    for (int k = 0; k < steps - own; ++k) p.push_back(to);
  return p;
}

int lead_steps(double dist, double per_step) { return dist <= 1e-12 ? 0 : int(std::ceil(dist / per_step - 1e-9)); }

}  // namespace

DiscreteStage plan_discrete(const Scenario& sc, const geometry::FreeSpace& fs, const PipelineConfig& cfg) {
  const std::size_t n = sc.starts.size();
  std::vector<double> cells{cfg.cell};
  if (cfg.refined_cell > 0 && cfg.refined_cell != cfg.cell) cells.push_back(cfg.refined_cell);
  DiscreteStage st;
  for (std::size_t attempt = 0; attempt < cells.size(); ++attempt) {
    try {
      st.cell = cells[attempt];
      st.graph = mapf::build_grid(fs, st.cell);
      const auto s = mapf::snap_distinct(st.graph, fs, sc.starts);
      const auto g = mapf::snap_distinct(st.graph, fs, sc.goals);
      st.plan = mapf::solve_mapf(st.graph, s, g, cfg.mapf);
      break;
    } catch (const Error&) {
      if (attempt + 1 == cells.size()) throw;
    }
  }
  st.substeps = substeps_for(st.cell, sc.limits);
  const double per_step = 0.5 * st.substeps * sc.limits.max_step();
  const auto grid = assign::embed_plan(st.plan, st.graph);
  std::vector<int> in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    in[i] = lead_steps(distance(sc.starts[i], grid[i].front()), per_step);
    out[i] = lead_steps(distance(grid[i].back(), sc.goals[i]), per_step);
    st.lead_in = std::max(st.lead_in, in[i]);
    st.lead_out = std::max(st.lead_out, out[i]);
  }
  st.embedded.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Path& p = st.embedded[i];
    p.push_back(sc.starts[i]);
    Path a = lead(sc.starts[i], grid[i].front(), in[i], st.lead_in, true);
    // the lead-in ends on the first grid point, which the grid plan repeats
    if (!a.empty()) a.pop_back();
    if (st.lead_in > 0) {
      p.insert(p.end(), a.begin(), a.end());
      p.insert(p.end(), grid[i].begin(), grid[i].end());
    } else {
      p = grid[i];
    }
    const Path b = lead(grid[i].back(), sc.goals[i], out[i], st.lead_out, false);
    p.insert(p.end(), b.begin(), b.end());
  }
  return st;
}

RunResult run_pipeline(const Scenario& sc, const PipelineConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  RunResult res;
  res.dt = sc.limits.dt;
  const int n = int(sc.starts.size());
  const auto& lim = sc.limits;
  auto& art = res.artifacts;
  try {
    stage("input", [&] {
      if (sc.goals.size() != sc.starts.size() || n == 0) throw InvalidInput("need matching non-empty starts and goals");
    });
    const geometry::FreeSpace fs = stage("free_space", [&] { return geometry::FreeSpace(sc.workspace, lim.robot_radius); });
    DiscreteStage st = stage("mapf", [&] { return plan_discrete(sc, fs, cfg); });
    art.cell = st.cell;
    art.substeps = st.substeps;
    art.lead_in = st.lead_in;
    art.lead_out = st.lead_out;
    art.plan = st.plan;
    art.embedded = st.embedded;
    art.partition = stage("decompose", [&] { return decomp::pbd(fs, art.embedded); });
    art.subproblems = stage("assign", [&] {
      const auto tr = assign::extract_transitions(art.partition, art.embedded);
      // slower steps when one step crosses more regions than it has substeps
      for (int retry = 0;; ++retry) {
        try {
          return assign::build_subproblems(art.partition, tr, art.embedded, lim, art.substeps);
        } catch (const InconsistentChain&) {
          if (retry == 3) throw;
          art.substeps *= 2;
        }
      }
    });
    const int length = int(st.embedded.front().size() - 1) * art.substeps + 1;

    auto model = cfg.model;
    if (!model)
      model = stage("model", [&]() -> std::shared_ptr<const diffusion::ScoreModel> {
        if (!cfg.train_if_missing) throw InvalidInput("no score model");
        auto tc = cfg.train;
        tc.seed = derive_seed(sc.seed, tc.seed);
        const auto data = diffusion::make_training_set(art.partition, cfg.train_samples, tc.seed);
        return std::make_shared<diffusion::ScoreModel>(diffusion::train_score(data, tc));
      });

    const std::size_t m = art.subproblems.size();
    art.sampled.assign(m, {});
    art.repaired.assign(m, {});
    std::vector<char> repair_failed(m, 0);
    const std::uint64_t base = derive_seed(sc.seed, cfg.sampler.seed);
    stage("sample", [&] {
      parallel_for(int(m), worker_count(cfg.workers), [&](int k) {
        const auto& sub = art.subproblems[std::size_t(k)];
        diffusion::SamplerConfig sc_cfg = cfg.sampler;
        sc_cfg.warm_start = cfg.warm_start;
        sc_cfg.seed = derive_seed(base, std::uint64_t(sub.region));
        auto paths = diffusion::sample_subproblem(sub, *model, sc_cfg, sc.workspace.obstacles);
        art.sampled[std::size_t(k)] = paths;
        repair::AlmConfig alm = cfg.alm;
        alm.seed = derive_seed(sc_cfg.seed, 7);
        try {
          art.repaired[std::size_t(k)] = repair::repair_subproblem(sub, paths, lim, alm);
        } catch (const RepairFailed&) {
          repair_failed[std::size_t(k)] = 1;
          art.repaired[std::size_t(k)] = std::move(paths);
        }
      });
    });

    auto subs = art.subproblems;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t s = 0; s < subs[k].segments.size(); ++s) subs[k].segments[s].waypoints = art.repaired[k][s];
    res.trajectories = assign::stitch(subs, n, length);
    res.report = repair::check_feasibility({res.trajectories, lim.dt}, lim, sc.workspace);

    if (!res.report.empty() && cfg.global_repair && res.report.obstacle_violations.empty()) {
      // conflicts across handoffs: one pass over every robot, handoffs pinned
      repair::PointConstraints cons(static_cast<std::size_t>(n));
      for (auto& row : cons) row.assign(std::size_t(length), {});
      for (const auto& sub : art.subproblems)
        for (const auto& seg : sub.segments) {
          auto& row = cons[std::size_t(seg.robot)];
          for (int h = seg.h_enter; h <= seg.h_exit; ++h) row[std::size_t(h)].region = &sub.polygon;
          row[std::size_t(seg.h_enter)].pinned = row[std::size_t(seg.h_exit)].pinned = true;
        }
      std::vector<diffusion::TimedPath> x;
      for (const auto& p : res.trajectories) x.push_back({0, p});
      art.global_repair_used = true;
      try {
        repair::AlmConfig alm = cfg.alm;
        alm.seed = derive_seed(base, 0x61);
        const auto y = repair::alm_project(x, lim, alm, cons);
        for (std::size_t i = 0; i < y.size(); ++i) res.trajectories[i] = y[i].points;
        res.report = repair::check_feasibility({res.trajectories, lim.dt}, lim, sc.workspace);
      } catch (const RepairFailed&) {
      }
    }

    for (int i = 0; i < n; ++i) {
      const auto& p = res.trajectories[std::size_t(i)];
      res.path_ratio.push_back(metric_path_ratio(p, sc.starts[std::size_t(i)], sc.goals[std::size_t(i)]));
      res.acceleration.push_back(metric_acceleration(p, lim.dt));
    }
    for (int i = 0; i < n; ++i) {
      res.mean_path_ratio += res.path_ratio[std::size_t(i)] / n;
      res.mean_acceleration += res.acceleration[std::size_t(i)] / n;
    }
    res.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    if (!res.report.empty()) {
      res.cause = std::count(repair_failed.begin(), repair_failed.end(), 1) ? "repair" : "infeasible";
      res.detail = std::to_string(res.report.size()) + " violations";
    } else if (res.wall_time > cfg.time_limit) {
      res.cause = "timeout";
    } else if (std::any_of(res.path_ratio.begin(), res.path_ratio.end(), [](double p) { return p < 1.0 - 1e-9; })) {
      res.cause = "metric";
    } else {
      res.success = true;
    }
  } catch (const StageError& e) {
    res.cause = e.stage;
    res.detail = e.what();
    res.success = false;
  } catch (const std::exception& e) {
    res.cause = "check";
    res.detail = e.what();
    res.success = false;
  }
  res.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
  if (res.success && res.wall_time > cfg.time_limit) {
    res.success = false;
    res.cause = "timeout";
  }
  return res;
}

}  // namespace dgd::harness
