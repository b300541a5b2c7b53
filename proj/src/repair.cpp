#include "dgd/repair.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dgd::repair {

using diffusion::obstacle_distance;

ViolationReport check_feasibility(const TrajectorySet& set, const KinodynamicLimits& limits,
                                  const geometry::Workspace& ws) {
  ViolationReport rep;
  const auto& T = set.trajs;
  for (std::size_t i = 0; i < T.size(); ++i)
    if (T[i].size() != T[0].size()) throw LengthMismatch("trajectories differ in length");
  const double r = limits.robot_radius;
  const auto& b = ws.bounds;
  for (std::size_t i = 0; i < T.size(); ++i) {
    for (std::size_t h = 0; h < T[i].size(); ++h) {
      const Vec2 p = T[i][h];
      double clearance = std::min({p.x - b.min.x, b.max.x - p.x, p.y - b.min.y, b.max.y - p.y});
      for (const auto& o : ws.obstacles) {
        double d = obstacle_distance(o, p);
        if (const auto* disk = std::get_if<geometry::Disk>(&o)) d -= disk->radius;
        clearance = std::min(clearance, d);
      }
      if (r - clearance > kFeasibilityTol) rep.obstacle_violations.push_back({int(i), int(h), r - clearance});
      if (h + 1 < T[i].size()) {
        const double excess = distance(T[i][h + 1], p) - limits.max_step();
        if (excess > kFeasibilityTol) rep.kinematic_violations.push_back({int(i), int(h), excess});
      }
    }
  }
  const std::size_t H = T.empty() ? 0 : T[0].size();
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < T.size(); ++i)
      for (std::size_t j = i + 1; j < T.size(); ++j) {
        const double depth = limits.r_agent - distance(T[i][h], T[j][h]);
        if (depth > kFeasibilityTol) rep.agent_violations.push_back({int(i), int(j), int(h), depth});
      }
  return rep;
}

double constraint_residual(std::span<const TimedPath> paths, const KinodynamicLimits& limits) {
  double worst = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& a = paths[i];
    for (std::size_t h = 0; h + 1 < a.points.size(); ++h)
      worst = std::max(worst, distance(a.points[h + 1], a.points[h]) - limits.max_step());
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      const auto& b = paths[j];
      const int lo = std::max(a.offset, b.offset);
      const int hi = std::min(a.offset + int(a.points.size()), b.offset + int(b.points.size()));
      for (int h = lo; h < hi; ++h)
        worst = std::max(worst, limits.r_agent - distance(a.points[std::size_t(h - a.offset)],
                                                          b.points[std::size_t(h - b.offset)]));
    }
  }
  return worst;
}

namespace {

struct Terms {
  double agent = 0.0;
  double kinematic = 0.0;
};

// Tightened hinge totals. With `dirs`, fills push directions for the agent
// term (biased sideways so symmetric head-on pairs can pass) and the exact
// kinematic gradient.
Terms evaluate(const std::vector<TimedPath>& y, double r_agent, double max_step,
               std::vector<std::vector<Vec2>>* agent_dir, std::vector<std::vector<Vec2>>* kin_grad,
               double bias = 0.5) {
  Terms t;
  if (agent_dir) {
    agent_dir->resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) (*agent_dir)[i].assign(y[i].points.size(), Vec2{});
  }
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      const auto& a = y[i];
      const auto& b = y[j];
      const int lo = std::max(a.offset, b.offset);
      const int hi = std::min(a.offset + int(a.points.size()), b.offset + int(b.points.size()));
      for (int h = lo; h < hi; ++h) {
        const std::size_t ia = std::size_t(h - a.offset), ib = std::size_t(h - b.offset);
        const Vec2 v = a.points[ia] - b.points[ib];
        const double n = norm(v);
        if (n >= r_agent) continue;
        t.agent += r_agent - n;
        if (!agent_dir) continue;
        Vec2 u = n > 1e-12 ? v / n : Vec2{1.0, 0.0};
        u = u + Vec2{-u.y, u.x} * bias;
        (*agent_dir)[i][ia] -= u;
        (*agent_dir)[j][ib] += u;
      }
    }
  if (kin_grad) kin_grad->resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    t.kinematic += diffusion::penalty_kinematic(y[i].points, max_step, kin_grad ? &(*kin_grad)[i] : nullptr);
  return t;
}

double distance2(const std::vector<TimedPath>& a, const std::vector<TimedPath>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t h = 0; h < a[i].points.size(); ++h) {
      const Vec2 d = a[i].points[h] - b[i].points[h];
      s += dot(d, d);
    }
  return s;
}

bool contained(const std::vector<TimedPath>& y, const geometry::Polygon* region) {
  if (!region) return true;
  for (const auto& p : y)
    for (const auto& w : p.points)
      if (geometry::signed_outside_distance(*region, w) > kFeasibilityTol) return false;
  return true;
}

bool contained(const std::vector<TimedPath>& y, const PointConstraints& cons) {
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t h = 0; h < y[i].points.size(); ++h)
      if (const auto* r = cons[i][h].region)
        if (geometry::signed_outside_distance(*r, y[i].points[h]) > kFeasibilityTol) return false;
  return true;
}

void jitter(std::vector<TimedPath>& y, const PointConstraints& cons, double r_agent, double max_step, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, scale);
  std::vector<std::vector<char>> hit(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) hit[i].assign(y[i].points.size(), 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& a = y[i];
    for (std::size_t h = 0; h + 1 < a.points.size(); ++h)
      if (distance(a.points[h + 1], a.points[h]) > max_step) hit[i][h] = hit[i][h + 1] = 1;
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      const auto& b = y[j];
      const int lo = std::max(a.offset, b.offset);
      const int hi = std::min(a.offset + int(a.points.size()), b.offset + int(b.points.size()));
      for (int h = lo; h < hi; ++h) {
        const std::size_t ia = std::size_t(h - a.offset), ib = std::size_t(h - b.offset);
        if (distance(a.points[ia], b.points[ib]) < r_agent) hit[i][ia] = hit[j][ib] = 1;
      }
    }
  }
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t h = 0; h < y[i].points.size(); ++h)
      if (hit[i][h] && !cons[i][h].pinned) y[i].points[h] += Vec2{z(rng), z(rng)};
}

}  // namespace

std::vector<TimedPath> alm_project(const std::vector<TimedPath>& x, const KinodynamicLimits& limits,
                                   const AlmConfig& cfg, const geometry::Polygon* region, AlmTrace* trace) {
  PointConstraints cons(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    cons[i].assign(x[i].points.size(), PointConstraint{region, false});
    cons[i].front().pinned = cons[i].back().pinned = true;
  }
  return alm_project(x, limits, cfg, cons, trace);
}

std::vector<TimedPath> alm_project(const std::vector<TimedPath>& x, const KinodynamicLimits& limits,
                                   const AlmConfig& cfg, const PointConstraints& cons, AlmTrace* trace) {
  if (cons.size() != x.size()) throw LengthMismatch("one constraint row per path expected");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (cons[i].size() != x[i].points.size()) throw LengthMismatch("one constraint per waypoint expected");
  if (!(cfg.rho0 > 0) || !(cfg.rho_growth > 1) || !(cfg.residual_tol > 0))
    throw InvalidInput("invalid ALM configuration");
  for (const auto& p : x)
    for (const auto& w : p.points)
      if (!std::isfinite(w.x) || !std::isfinite(w.y)) throw InvalidInput("non-finite waypoint");

  const double target = std::min(cfg.residual_tol, kFeasibilityTol);
  if (constraint_residual(x, limits) <= target && contained(x, cons)) return x;

  const double ra = limits.r_agent + cfg.margin;
  const double ms = std::max(0.0, limits.max_step() - cfg.margin);
  double nu_a = cfg.nu0, nu_k = cfg.nu0, rho = cfg.rho0;

  auto project = [&](std::vector<TimedPath>& y) {
    for (std::size_t i = 0; i < y.size(); ++i)
      for (std::size_t h = 0; h < y[i].points.size(); ++h)
        if (const auto* r = cons[i][h].region; r && !cons[i][h].pinned)
          y[i].points[h] = geometry::project_to_convex(y[i].points[h], *r);
  };
  auto objective = [&](const std::vector<TimedPath>& y) {
    const Terms t = evaluate(y, ra, ms, nullptr, nullptr);
    return distance2(y, x) + nu_a * t.agent + nu_k * t.kinematic +
           0.5 * rho * (t.agent * t.agent + t.kinematic * t.kinematic);
  };

  std::vector<TimedPath> y = x;
  project(y);
  double residual = constraint_residual(y, limits);
  double last_residual = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(cfg.seed);
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    double lr = cfg.inner_lr;
    double f = objective(y);
    double bias = 0.5;
    for (int it = 0; it < cfg.inner_steps; ++it) {
      std::vector<std::vector<Vec2>> ga, gk;
      const Terms t = evaluate(y, ra, ms, &ga, &gk, bias);
      const double wa = nu_a + rho * t.agent, wk = nu_k + rho * t.kinematic;
      std::vector<TimedPath> trial = y;
      bool improved = false;
      for (int halving = 0; halving < 40; ++halving) {
        for (std::size_t i = 0; i < y.size(); ++i)
          for (std::size_t h = 0; h < y[i].points.size(); ++h) {
            if (cons[i][h].pinned) continue;
            const Vec2 g = (y[i].points[h] - x[i].points[h]) * 2.0 + ga[i][h] * wa + gk[i][h] * wk;
            trial[i].points[h] = y[i].points[h] - g * lr;
          }
        project(trial);
        const double ft = objective(trial);
        if (ft < f) {
          y = trial;
          f = ft;
          improved = true;
          break;
        }
        lr *= 0.5;
      }
      if (!improved) {
        // the sideways bias is not a descent direction everywhere
        if (bias == 0.0) break;
        bias = 0.0;
        lr = cfg.inner_lr;
        continue;
      }
      bias = 0.5;
      lr = std::min(cfg.inner_lr, lr * 2.0);
    }
    const Terms t = evaluate(y, ra, ms, nullptr, nullptr);
    residual = constraint_residual(y, limits);
    if (residual > target && residual >= last_residual) {
      // stalled in a kink of the hinge penalty: shake the waypoints involved
      jitter(y, cons, ra, ms, limits.r_agent * 0.5, rng);
      project(y);
    }
    last_residual = residual;
    nu_a += rho * t.agent;
    nu_k += rho * t.kinematic;
    if (trace) {
      trace->residual.push_back(residual);
      trace->nu_agent.push_back(nu_a);
      trace->nu_kinematic.push_back(nu_k);
      trace->rho.push_back(rho);
    }
    if (residual <= target) return y;
    rho *= cfg.rho_growth;
  }
  throw RepairFailed("residual " + std::to_string(residual) + " after " + std::to_string(cfg.max_outer) +
                     " outer iterations");
}

TrajectorySet alm_project(const TrajectorySet& x, const KinodynamicLimits& limits, const AlmConfig& cfg,
                          AlmTrace* trace) {
  std::vector<TimedPath> in;
  for (const auto& p : x.trajs) {
    if (p.size() != x.trajs.front().size()) throw LengthMismatch("trajectories differ in length");
    in.push_back({0, p});
  }
  const auto out = alm_project(in, limits, cfg, nullptr, trace);
  TrajectorySet y{{}, x.dt};
  for (const auto& p : out) y.trajs.push_back(p.points);
  return y;
}

namespace {

std::vector<TimedPath> timed(const assign::Subproblem& sub, const std::vector<Path>& trajs) {
  if (trajs.size() != sub.segments.size()) throw LengthMismatch("one path per segment expected");
  std::vector<TimedPath> out;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const auto& seg = sub.segments[k];
    if (int(trajs[k].size()) != seg.h_exit - seg.h_enter + 1)
      throw LengthMismatch("segment path length differs from its window");
    out.push_back({seg.h_enter, trajs[k]});
  }
  return out;
}

}  // namespace

bool subproblem_feasible(const assign::Subproblem& sub, const std::vector<Path>& trajs,
                         const KinodynamicLimits& limits) {
  const auto y = timed(sub, trajs);
  return constraint_residual(y, limits) <= kFeasibilityTol && contained(y, &sub.polygon);
}

std::vector<Path> repair_subproblem(const assign::Subproblem& sub, const std::vector<Path>& trajs,
                                    const KinodynamicLimits& limits, const AlmConfig& cfg) {
  if (subproblem_feasible(sub, trajs, limits)) return trajs;
  const auto y = alm_project(timed(sub, trajs), limits, cfg, &sub.polygon);
  std::vector<Path> out;
  for (const auto& p : y) out.push_back(p.points);
  return out;
}

}  // namespace dgd::repair
