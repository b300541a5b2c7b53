#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "dgd/harness.hpp"
#include "dgd/io.hpp"

using namespace dgd;
using namespace dgd::harness;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 2;
constexpr int kInvalid = 3;

Scenario load_scenario(const std::string& map_path, const std::string& scenario_path) {
  const auto ws = io::workspace_from_json(io::read_json(map_path));
  return io::scenario_from_json(io::read_json(scenario_path), ws);
}

int cmd_gen(const std::string& kind, std::uint64_t seed, int robots, const std::string& map_out,
            const std::string& scenario_out) {
  const MapKind k = parse_map_kind(kind);
  Scenario sc = gen_map(k, seed);
  io::write_json(map_out, io::to_json(sc.workspace));
  if (!scenario_out.empty()) {
    sc = place_robots(sc, robots, default_radius(k), derive_seed(seed, 1));
    io::write_json(scenario_out, io::to_json(sc));
  }
  return kOk;
}

int cmd_decompose(const std::string& map, const std::string& plan, double radius, const std::string& out) {
  const auto ws = io::workspace_from_json(io::read_json(map));
  std::vector<Path> embedded;
  if (!plan.empty()) embedded = io::embedded_from_json(io::read_json(plan));
  const auto part = decomp::pbd(geometry::FreeSpace(ws, radius), embedded);
  io::write_json(out, io::to_json(part));
  std::cout << part.regions.size() << " regions from " << part.triangle_count << " triangles (" << part.priority_mode
            << ")\n";
  return kOk;
}

int cmd_mapf(const std::string& map, const std::string& scenario, double cell, const std::string& out) {
  const Scenario sc = load_scenario(map, scenario);
  PipelineConfig cfg;
  cfg.cell = cell;
  DiscreteStage st;
  try {
    st = plan_discrete(sc, geometry::FreeSpace(sc.workspace, sc.limits.robot_radius), cfg);
  } catch (const Unsolvable& e) {
    std::cerr << e.what() << '\n';
    return kFailed;
  }
  io::write_json(out, io::to_json(st));
  std::cout << "makespan " << st.plan.makespan << ", sum of costs " << st.plan.sum_of_costs() << ", cell " << st.cell
            << '\n';
  return kOk;
}

int cmd_train(const std::string& partition, const std::string& out, int epochs, std::uint64_t seed, int samples,
              double lr) {
  diffusion::ScoreModel model;
  if (partition.empty()) {
    model = default_model(seed, samples, epochs);
  } else {
    const auto part = io::partition_from_json(io::read_json(partition));
    diffusion::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.lr = lr;
    diffusion::TrainReport rep;
    model = diffusion::train_score(diffusion::make_training_set(part, samples, seed), cfg, &rep);
    if (!rep.train_loss.empty())
      std::cout << "loss " << rep.initial_train_loss << " -> " << rep.train_loss.back() << " (held out "
                << rep.heldout_loss.back() << ")\n";
  }
  model.save(out);
  return kOk;
}

int cmd_plan(const std::string& map, const std::string& scenario, const std::string& model_path, bool no_warm,
             std::uint64_t seed, const std::string& out, const std::string& svg, bool regions, bool smoothed) {
  const Scenario sc = load_scenario(map, scenario);
  PipelineConfig cfg;
  cfg.model = std::make_shared<diffusion::ScoreModel>(diffusion::ScoreModel::load(model_path));
  cfg.warm_start = !no_warm;
  cfg.sampler.seed = seed;
  const RunResult res = run_pipeline(sc, cfg);
  io::write_json(out, io::to_json(res));
  if (!svg.empty()) {
    SvgOptions opt;
    opt.partition = regions ? &res.artifacts.partition : nullptr;
    opt.smoothed = smoothed;
    render_svg(sc, res.trajectories, svg, opt);
  }
  std::cout << (res.success ? "success" : "failure") << (res.cause.empty() ? "" : " (" + res.cause + ")")
            << " in " << res.wall_time << " s, P " << res.mean_path_ratio << ", A " << res.mean_acceleration << '\n';
  if (!res.detail.empty()) std::cerr << res.detail << '\n';
  return res.success ? kOk : kFailed;
}

BenchConfig suite_from_json(const io::json& j, const std::string& suite_path) {
  BenchConfig cfg;
  try {
    for (const auto& m : j.at("maps")) cfg.maps.push_back(parse_map_kind(m.get<std::string>()));
    cfg.robots = j.at("robots").get<std::vector<int>>();
    cfg.instances = j.value("instances", 25);
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.workers = j.value("workers", 0);
    cfg.pipeline.time_limit = j.value("time_limit", 900.0);
    cfg.pipeline.warm_start = j.value("warm_start", true);
    if (j.contains("model")) {
      std::string path = j.at("model").get<std::string>();
      if (!path.empty() && path.front() != '/') {
        const auto slash = suite_path.find_last_of('/');
        if (slash != std::string::npos) path = suite_path.substr(0, slash + 1) + path;
      }
      cfg.pipeline.model = std::make_shared<diffusion::ScoreModel>(diffusion::ScoreModel::load(path));
    }
  } catch (const io::json::exception& e) {
    throw IoError(std::string("suite: ") + e.what());
  }
  if (!cfg.pipeline.model) cfg.pipeline.model = std::make_shared<diffusion::ScoreModel>(default_model(cfg.seed));
  return cfg;
}

int cmd_bench(const std::string& suite, const std::string& out, const std::string& table, bool with_time) {
  const BenchConfig cfg = suite_from_json(io::read_json(suite), suite);
  const auto rows = aggregate(bench_runs(cfg));
  io::write_text(out, bench_csv(rows, with_time));
  const std::string text = bench_table(rows);
  if (!table.empty()) io::write_text(table, text);
  std::cout << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposition-guided diffusion planner for robot teams"};
  app.require_subcommand(1);

  std::string kind = "basic", map, scenario, plan, out, model, partition, svg, suite, table, scenario_out;
  std::uint64_t seed = 0;
  int robots = 6, epochs = 50, samples = 10000;
  double radius = 0.04, cell = 0.25, lr = 1e-3;
  bool no_warm = false, regions = false, smoothed = false, with_time = false;

  auto* gen = app.add_subcommand("gen", "generate a benchmark map and optional scenario");
  gen->add_option("--kind", kind, "basic, dense, room, shelf or large")->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--robots", robots)->capture_default_str();
  gen->add_option("--map-out", map)->required();
  gen->add_option("--scenario-out", scenario_out);

  auto* dec = app.add_subcommand("decompose", "convex decomposition of the free space");
  dec->add_option("--map", map)->required();
  dec->add_option("--plan", plan, "plan file from `dgd mapf` for traffic priorities");
  dec->add_option("--radius", radius, "robot radius used to inflate obstacles")->capture_default_str();
  dec->add_option("--out", out)->required();

  auto* mp = app.add_subcommand("mapf", "grid MAPF plan");
  mp->add_option("--map", map)->required();
  mp->add_option("--scenario", scenario)->required();
  mp->add_option("--cell", cell)->capture_default_str();
  mp->add_option("--out", out)->required();

  auto* tr = app.add_subcommand("train", "train a score model");
  tr->add_option("--partition", partition, "partition file; omitted: the built-in map families");
  tr->add_option("--out", out)->required();
  tr->add_option("--epochs", epochs)->capture_default_str();
  tr->add_option("--seed", seed)->capture_default_str();
  tr->add_option("--samples", samples)->capture_default_str();
  tr->add_option("--lr", lr)->capture_default_str();

  auto* pl = app.add_subcommand("plan", "full pipeline on one scenario");
  pl->add_option("--map", map)->required();
  pl->add_option("--scenario", scenario)->required();
  pl->add_option("--model", model)->required();
  pl->add_flag("--no-warm-start", no_warm);
  pl->add_option("--seed", seed, "sampler seed")->capture_default_str();
  pl->add_option("--out", out)->required();
  pl->add_option("--svg", svg);
  pl->add_flag("--regions", regions, "draw the partition in the SVG");
  pl->add_flag("--smooth", smoothed, "Savitzky-Golay smoothing in the SVG");

  auto* be = app.add_subcommand("bench", "benchmark suite");
  be->add_option("--suite", suite)->required();
  be->add_option("--out", out)->required();
  be->add_option("--table", table, "also write the text table here");
  be->add_flag("--with-time", with_time, "add mean wall time to the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*gen) return cmd_gen(kind, seed, robots, map, scenario_out);
    if (*dec) return cmd_decompose(map, plan, radius, out);
    if (*mp) return cmd_mapf(map, scenario, cell, out);
    if (*tr) return cmd_train(partition, out, epochs, seed, samples, lr);
    if (*pl) return cmd_plan(map, scenario, model, no_warm, seed, out, svg, regions, smoothed);
    if (*be) return cmd_bench(suite, out, table, with_time);
  } catch (const PlacementFailed& e) {
    std::cerr << e.what() << '\n';
    return kFailed;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
