#include "dgd/io.hpp"

#include <fstream>
#include <sstream>

namespace dgd::io {

namespace {

json point(const Vec2& p) { return json::array({p.x, p.y}); }

json points(const std::vector<Vec2>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back(point(p));
  return a;
}

Vec2 get_point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("point must be [x, y]");
  return Vec2{j.at(0).get<double>(), j.at(1).get<double>()};
}

std::vector<Vec2> get_points(const json& j) {
  if (!j.is_array()) throw IoError("expected an array of points");
  std::vector<Vec2> out;
  for (const auto& p : j) out.push_back(get_point(p));
  return out;
}

// nlohmann errors become IoError
template <class F>
auto guarded(const char* what, F&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return guarded("parse", [&] { return json::parse(ss.str()); });
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << text;
  if (!f) throw IoError("cannot write " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json to_json(const geometry::Workspace& ws) {
  json obs = json::array();
  for (const auto& o : ws.obstacles) {
    if (const auto* d = std::get_if<geometry::Disk>(&o))
      obs.push_back({{"type", "disk"}, {"center", point(d->center)}, {"radius", d->radius}});
    else
      obs.push_back({{"type", "polygon"}, {"vertices", points(std::get<geometry::Polygon>(o).vertices)}});
  }
  return {{"bounds", {{"min", point(ws.bounds.min)}, {"max", point(ws.bounds.max)}}}, {"obstacles", obs}};
}

geometry::Workspace workspace_from_json(const json& j) {
  return guarded("map", [&] {
    geometry::Workspace ws;
    ws.bounds.min = get_point(j.at("bounds").at("min"));
    ws.bounds.max = get_point(j.at("bounds").at("max"));
    if (!(ws.bounds.max.x > ws.bounds.min.x && ws.bounds.max.y > ws.bounds.min.y)) throw IoError("empty bounds");
    for (const auto& o : j.at("obstacles")) {
      const std::string type = o.at("type").get<std::string>();
      if (type == "disk")
        ws.obstacles.push_back(geometry::Disk{get_point(o.at("center")), o.at("radius").get<double>()});
      else if (type == "polygon")
        ws.obstacles.push_back(geometry::Polygon{get_points(o.at("vertices"))});
      else
        throw IoError("unknown obstacle type '" + type + "'");
    }
    return ws;
  });
}

json to_json(const harness::Scenario& sc) {
  const auto& l = sc.limits;
  return {{"starts", points(sc.starts)},
          {"goals", points(sc.goals)},
          {"seed", sc.seed},
          {"limits",
           {{"robot_radius", l.robot_radius}, {"v_max", l.v_max}, {"dt", l.dt}, {"r_obs", l.r_obs}, {"r_agent", l.r_agent}}}};
}

harness::Scenario scenario_from_json(const json& j, const geometry::Workspace& ws) {
  return guarded("scenario", [&] {
    harness::Scenario sc;
    sc.workspace = ws;
    sc.starts = get_points(j.at("starts"));
    sc.goals = get_points(j.at("goals"));
    if (sc.starts.size() != sc.goals.size()) throw IoError("starts and goals differ in count");
    sc.seed = j.value("seed", std::uint64_t{0});
    const auto& l = j.at("limits");
    sc.limits = harness::default_limits(l.at("robot_radius").get<double>());
    sc.limits.v_max = l.value("v_max", sc.limits.v_max);
    sc.limits.dt = l.value("dt", sc.limits.dt);
    sc.limits.r_obs = l.value("r_obs", sc.limits.r_obs);
    sc.limits.r_agent = l.value("r_agent", sc.limits.r_agent);
    return sc;
  });
}

json to_json(const decomp::ConvexPartition& part) {
  json regions = json::array();
  for (const auto& r : part.regions) regions.push_back(points(r.vertices));
  return {{"regions", regions},
          {"adjacency", part.adjacency},
          {"priority_mode", part.priority_mode},
          {"triangle_count", part.triangle_count},
          {"merges", part.merges}};
}

decomp::ConvexPartition partition_from_json(const json& j) {
  return guarded("partition", [&] {
    decomp::ConvexPartition part;
    for (const auto& r : j.at("regions")) part.regions.push_back(geometry::Polygon{get_points(r)});
    if (j.contains("adjacency"))
      part.adjacency = j.at("adjacency").get<std::vector<std::vector<int>>>();
    else
      part.adjacency = decomp::build_adjacency(part.regions);
    part.priority_mode = j.value("priority_mode", std::string{});
    part.triangle_count = j.value("triangle_count", 0);
    part.merges = j.value("merges", 0);
    return part;
  });
}

json to_json(const harness::DiscreteStage& st) {
  json paths = json::array(), embedded = json::array();
  for (const auto& p : st.plan.paths) {
    json cells = json::array();
    for (int v : p) cells.push_back({st.graph.cell(v).ix, st.graph.cell(v).iy});
    paths.push_back(cells);
  }
  for (const auto& p : st.embedded) embedded.push_back(points(p));
  return {{"cell", st.cell},
          {"origin", point(st.graph.origin())},
          {"makespan", st.plan.makespan},
          {"sum_of_costs", st.plan.sum_of_costs()},
          {"substeps", st.substeps},
          {"lead_in", st.lead_in},
          {"lead_out", st.lead_out},
          {"cells", paths},
          {"embedded", embedded}};
}

std::vector<Path> embedded_from_json(const json& j) {
  return guarded("plan", [&] {
    std::vector<Path> out;
    for (const auto& p : j.at("embedded")) out.push_back(get_points(p));
    return out;
  });
}

json to_json(const harness::RunResult& r) {
  json trajs = json::array();
  for (const auto& p : r.trajectories) trajs.push_back(points(p));
  return {{"success", r.success},
          {"cause", r.cause},
          {"detail", r.detail},
          {"dt", r.dt},
          {"trajectories", trajs},
          {"path_ratio", r.path_ratio},
          {"acceleration", r.acceleration},
          {"mean_path_ratio", r.mean_path_ratio},
          {"mean_acceleration", r.mean_acceleration},
          {"violations",
           {{"obstacle", r.report.obstacle_violations.size()},
            {"agent", r.report.agent_violations.size()},
            {"kinematic", r.report.kinematic_violations.size()}}},
          {"regions", r.artifacts.partition.regions.size()},
          {"subproblems", r.artifacts.subproblems.size()},
          {"cell", r.artifacts.cell}};
}

std::vector<Path> trajectories_from_json(const json& j) {
  return guarded("trajectories", [&] {
    std::vector<Path> out;
    for (const auto& p : j.at("trajectories")) out.push_back(get_points(p));
    return out;
  });
}

}  // namespace dgd::io
