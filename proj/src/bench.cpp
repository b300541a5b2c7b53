#include <cstdio>
#include <iomanip>
#include <sstream>

#include "dgd/harness.hpp"

namespace dgd::harness {

std::uint64_t instance_seed(std::uint64_t base, MapKind map, int robots, int instance) {
  return derive_seed(derive_seed(derive_seed(base, std::uint64_t(map)), std::uint64_t(robots)), std::uint64_t(instance));
}

std::vector<BenchRun> bench_runs(const BenchConfig& cfg) {
  std::vector<BenchRun> runs;
  for (MapKind map : cfg.maps)
    for (int robots : cfg.robots)
      for (int k = 0; k < cfg.instances; ++k) {
        BenchRun r;
        r.map = map;
        r.robots = robots;
        r.instance = k;
        r.seed = instance_seed(cfg.seed, map, robots, k);
        runs.push_back(r);
      }
  const int workers = worker_count(cfg.workers);
  PipelineConfig pc = cfg.pipeline;
  if (workers > 1) pc.workers = 1;
  parallel_for(int(runs.size()), workers, [&](int idx) {
    BenchRun& r = runs[std::size_t(idx)];
    Scenario sc;
    try {
      sc = place_robots(gen_map(r.map, r.seed), r.robots, default_radius(r.map), derive_seed(r.seed, 1));
    } catch (const Error&) {
      r.cause = "placement";
      return;
    }
    const RunResult res = run_pipeline(sc, pc);
    r.success = res.success;
    r.cause = res.cause;
    r.wall_time = res.wall_time;
    r.mean_path_ratio = res.mean_path_ratio;
    r.mean_acceleration = res.mean_acceleration;
  });
  return runs;
}

std::vector<BenchRow> aggregate(const std::vector<BenchRun>& runs) {
  std::vector<BenchRow> rows;
  std::vector<double> t, p, a;
  auto close = [&] {
    if (rows.empty()) return;
    auto& row = rows.back();
    if (row.successes > 0) {
      row.time = t.back() / row.successes;
      row.path_ratio = p.back() / row.successes;
      row.acceleration = a.back() / row.successes;
    }
  };
  for (const auto& r : runs) {
    if (rows.empty() || rows.back().map != r.map || rows.back().robots != r.robots) {
      close();
      rows.push_back({r.map, r.robots, 0, 0, {}, {}, {}});
      t.push_back(0);
      p.push_back(0);
      a.push_back(0);
    }
    auto& row = rows.back();
    ++row.instances;
    if (r.success) {
      ++row.successes;
      t.back() += r.wall_time;
      p.back() += r.mean_path_ratio;
      a.back() += r.mean_acceleration;
    }
  }
  close();
  return rows;
}

namespace {

std::string fmt(const std::optional<double>& v, int digits) {
  if (!v) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

}  // namespace

std::string bench_csv(const std::vector<BenchRow>& rows, bool with_time) {
  std::ostringstream os;
  os << "map,robots,instances,successes,S" << (with_time ? ",T" : "") << ",P,A\n";
  for (const auto& r : rows) {
    os << to_string(r.map) << ',' << r.robots << ',' << r.instances << ',' << r.successes << ','
       << fmt(r.success_rate(), 1);
    if (with_time) os << ',' << fmt(r.time, 3);
    os << ',' << fmt(r.path_ratio, 6) << ',' << fmt(r.acceleration, 6) << '\n';
  }
  return os.str();
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "map" << std::right << std::setw(7) << "robots" << std::setw(8) << "S(%)"
     << std::setw(10) << "T(s)" << std::setw(10) << "P" << std::setw(12) << "A" << '\n';
  for (const auto& r : rows)
    os << std::left << std::setw(8) << to_string(r.map) << std::right << std::setw(7) << r.robots << std::setw(8)
       << fmt(r.success_rate(), 1) << std::setw(10) << fmt(r.time, 2) << std::setw(10) << fmt(r.path_ratio, 3)
       << std::setw(12) << fmt(r.acceleration, 4) << '\n';
  return os.str();
}

}  // namespace dgd::harness
