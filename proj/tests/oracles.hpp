#pragma once

// Reference implementations used to cross-check the library. They favor
// brute force (dense sampling, exhaustive scans, explicit time expansion)
// over cleverness and share no collision math with the code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "sipptrack/grid_world.hpp"
#include "sipptrack/planner.hpp"

namespace oracle {

using sipptrack::DynamicObstacle;
using sipptrack::GridMap;
using sipptrack::Instance;
using sipptrack::Plan;
using sipptrack::Vec2;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Straight-line motion p(t) = p0 + v (t - t0) on [t0, t1].
struct Motion {
  Vec2 p0;
  Vec2 v;
  double t0 = 0.0;
  double t1 = 0.0;
  Vec2 at(double t) const { return {p0.x + v.x * (t - t0), p0.y + v.y * (t - t0)}; }
};

struct SampledInterval {
  double first = kInf;
  double last = -kInf;
  bool any() const { return first <= last; }
};

/// Samples the common window every `step` seconds (endpoints included) and
/// reports the first and last sample with center distance below `clearance`.
inline SampledInterval sampled_contact(const Motion& a, const Motion& b, double clearance, double step = 1e-3) {
  SampledInterval out;
  const double lo = std::max(a.t0, b.t0);
  const double hi = std::min(a.t1, b.t1);
  if (!(hi >= lo)) return out;
  const long n = static_cast<long>(std::floor((hi - lo) / step));
  for (long k = 0; k <= n + 1; ++k) {
    const double t = k <= n ? lo + static_cast<double>(k) * step : hi;
    const Vec2 pa = a.at(t);
    const Vec2 pb = b.at(t);
    if (std::hypot(pa.x - pb.x, pa.y - pb.y) < clearance) {
      out.first = std::min(out.first, t);
      out.last = std::max(out.last, t);
    }
  }
  return out;
}

/// Smallest center distance between two motions over [lo, hi], from the
/// vertex of the squared-distance parabola clamped to the window.
inline double min_distance(Vec2 dp, Vec2 dv, double lo, double hi) {
  // dp = offset at time lo, dv = relative velocity.
  const double vv = dv.x * dv.x + dv.y * dv.y;
  double s = 0.0;
  if (vv > 0.0) s = std::clamp(-(dp.x * dv.x + dp.y * dv.y) / vv, 0.0, hi - lo);
  return std::hypot(dp.x + dv.x * s, dp.y + dv.y * s);
}

/// Obstacle schedule as motions; the final motion parks forever.
inline std::vector<Motion> motions_of(const DynamicObstacle& obs) {
  std::vector<Motion> out;
  const auto& w = obs.waypoints;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double dt = w[i + 1].t - w[i].t;
    out.push_back({w[i].pos, {(w[i + 1].pos.x - w[i].pos.x) / dt, (w[i + 1].pos.y - w[i].pos.y) / dt}, w[i].t,
                   w[i + 1].t});
  }
  out.push_back({w.back().pos, {0.0, 0.0}, w.back().t, kInf});
  return out;
}

/// Smallest distance between a robot motion and an obstacle schedule.
inline double min_distance_to(const Motion& robot, const std::vector<Motion>& obstacle) {
  double best = kInf;
  for (const auto& m : obstacle) {
    const double lo = std::max(robot.t0, m.t0);
    const double hi = std::min(robot.t1, m.t1);
    if (!(hi >= lo)) continue;
    const Vec2 pr = robot.at(lo);
    const Vec2 po = m.at(lo);
    const Vec2 dp{pr.x - po.x, pr.y - po.y};
    const Vec2 dv{robot.v.x - m.v.x, robot.v.y - m.v.y};
    best = std::min(best, min_distance(dp, dv, lo, std::isfinite(hi) ? hi : lo + 1e6));
  }
  return best;
}

/// Distance from p to the nearest blocked cell (or the map border region),
/// by enumerating the cells around p.
inline double wall_distance(Vec2 p, const GridMap& map) {
  const double l = map.cell_size();
  const int cx = static_cast<int>(std::floor(p.x / l));
  const int cy = static_cast<int>(std::floor(p.y / l));
  double best = kInf;
  for (int y = cy - 3; y <= cy + 3; ++y) {
    for (int x = cx - 3; x <= cx + 3; ++x) {
      const bool blocked = x < 0 || y < 0 || x >= map.width() || y >= map.height() || map.blocked(x, y);
      if (!blocked) continue;
      const double qx = std::clamp(p.x, x * l, (x + 1) * l);
      const double qy = std::clamp(p.y, y * l, (y + 1) * l);
      best = std::min(best, std::hypot(p.x - qx, p.y - qy));
    }
  }
  return best;
}

struct AuditResult {
  double min_dynamic_margin = kInf;  // min over time of distance - (2r + delta)
  double min_static_clearance = kInf;
  std::size_t samples = 0;
};

/// Samples the plan every `step` seconds from 0 until every obstacle has
/// parked (and at least one second past arrival), measuring clearances.
inline AuditResult audit_plan(const Plan& plan, const Instance& inst, double delta, double step = 1e-3) {
  AuditResult out;
  double horizon = plan.arrival + 1.0;
  for (const auto& o : inst.obstacles) horizon = std::max(horizon, o.waypoints.back().t + 1.0);
  const long n = static_cast<long>(std::ceil(horizon / step));
  std::vector<std::size_t> cursor(inst.obstacles.size(), 0);
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * step;
    const Vec2 p = plan.at(t).pos;
    out.min_static_clearance = std::min(out.min_static_clearance, wall_distance(p, inst.map));
    for (std::size_t i = 0; i < inst.obstacles.size(); ++i) {
      const auto& w = inst.obstacles[i].waypoints;
      auto& c = cursor[i];
      while (c + 1 < w.size() && w[c + 1].t <= t) ++c;
      Vec2 q = w[c].pos;
      if (c + 1 < w.size() && t > w[c].t) {
        const double s = (t - w[c].t) / (w[c + 1].t - w[c].t);
        q = {w[c].pos.x + (w[c + 1].pos.x - w[c].pos.x) * s, w[c].pos.y + (w[c + 1].pos.y - w[c].pos.y) * s};
      }
      const double d = std::hypot(p.x - q.x, p.y - q.y) - (inst.robot.radius + inst.obstacles[i].radius + delta);
      out.min_dynamic_margin = std::min(out.min_dynamic_margin, d);
    }
    ++out.samples;
  }
  return out;
}

/// Earliest arrival of a 4-connected wait/move robot on an explicit time
/// grid (step `dt`), goal reached when the goal cell stays clear forever.
/// Moves take cell_size / speed seconds and must be a multiple of dt.
/// Collision checks use exact closest-approach distances with tangency
/// allowed.
inline std::optional<double> time_expanded_search(const Instance& inst, double delta, double dt = 0.05,
                                                  double horizon = 120.0) {
  const GridMap& map = inst.map;
  const double clearance = 2.0 * inst.robot.radius + delta;
  const double tol = 1e-9;
  std::vector<std::vector<Motion>> obs;
  for (const auto& o : inst.obstacles) obs.push_back(motions_of(o));

  auto safe = [&](const Motion& robot) {
    for (const auto& o : obs) {
      if (min_distance_to(robot, o) < clearance - tol) return false;
    }
    return true;
  };

  const int move_steps = static_cast<int>(std::lround(map.cell_size() / inst.robot.v_max / dt));
  const double move_time = move_steps * dt;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  const int cells = map.cell_count();
  const int start = map.id(map.cell_at(inst.start.pos));
  const int goal = map.id(map.cell_at(inst.goal));
  if (!safe({inst.start.pos, {0.0, 0.0}, 0.0, 0.0})) return std::nullopt;

  // reach[k][c]: robot can be at rest in cell c at time k*dt.
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(steps) + 1, std::vector<char>(cells, 0));
  reach[0][static_cast<std::size_t>(start)] = 1;
  const std::array<std::array<int, 2>, 4> dirs = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    for (int c = 0; c < cells; ++c) {
      if (!reach[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)]) continue;
      const Vec2 p = map.center(c);
      if (c == goal && safe({p, {0.0, 0.0}, t, kInf})) return t;
      if (k + 1 <= steps && safe({p, {0.0, 0.0}, t, t + dt})) reach[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(c)] = 1;
      if (k + move_steps > steps) continue;
      const auto ci = map.cell(c);
      for (const auto& d : dirs) {
        const int nx = ci.x + d[0];
        const int ny = ci.y + d[1];
        if (map.blocked(nx, ny)) continue;
        const Vec2 q = map.center(nx, ny);
        const Motion m{p, {(q.x - p.x) / move_time, (q.y - p.y) / move_time}, t, t + move_time};
        if (safe(m)) reach[static_cast<std::size_t>(k + move_steps)][static_cast<std::size_t>(map.id(nx, ny))] = 1;
      }
    }
  }
  return std::nullopt;
}

/// Earliest departure for a straight move found by scanning candidate
/// departure times at `step` resolution and sampling the move at `step`.
inline std::optional<double> scan_departure(Vec2 from, Vec2 to, double speed, double lo, double hi,
                                            const std::vector<DynamicObstacle>& obstacles, double clearance,
                                            double step = 1e-3) {
  const double dur = std::hypot(to.x - from.x, to.y - from.y) / speed;
  const Vec2 v{(to.x - from.x) / dur, (to.y - from.y) / dur};
  const long n = static_cast<long>(std::floor((hi - lo) / step));
  const long m = static_cast<long>(std::ceil(dur / step));
  for (long k = 0; k <= n; ++k) {
    const double td = lo + static_cast<double>(k) * step;
    bool ok = true;
    for (long j = 0; j <= m && ok; ++j) {
      const double tau = std::min(static_cast<double>(j) * step, dur);
      const Vec2 p{from.x + v.x * tau, from.y + v.y * tau};
      for (const auto& o : obstacles) {
        const Vec2 q = sipptrack::obstacle_position_at(o, td + tau);
        if (std::hypot(p.x - q.x, p.y - q.y) < clearance) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return td;
  }
  return std::nullopt;
}

/// Dense-sampling line-of-sight check: min distance from the segment to
/// blocked cells, sampled at n+1 points.
inline bool sampled_line_of_sight(Vec2 a, Vec2 b, double r, const GridMap& map, int n = 1000) {
  double best = kInf;
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    best = std::min(best, wall_distance({a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s}, map));
  }
  return best >= r - 1e-9;
}

/// Solves a dense n x n system by Gaussian elimination with partial pivoting.
template <std::size_t N>
std::array<double, N> solve(std::array<std::array<double, N>, N> A, std::array<double, N> b) {
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < N; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    }
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < N; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < N; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < N; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

/// Cubic through (t0, p0, v0) and (t1, p1, v1) in absolute time, as
/// coefficients of 1, t, t^2, t^3, from the 4 x 4 boundary system.
inline std::array<double, 4> cubic_by_solve(double t0, double p0, double v0, double t1, double p1, double v1) {
  const std::array<std::array<double, 4>, 4> A = {{{1.0, t0, t0 * t0, t0 * t0 * t0},
                                                    {0.0, 1.0, 2.0 * t0, 3.0 * t0 * t0},
                                                    {1.0, t1, t1 * t1, t1 * t1 * t1},
                                                    {0.0, 1.0, 2.0 * t1, 3.0 * t1 * t1}}};
  return solve<4>(A, {p0, v0, p1, v1});
}

/// Central difference.
template <class F>
double derivative(F&& f, double t, double h = 1e-5) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

/// Closed-form error of e'' = (l1 + l2) e' - l1 l2 e with e(0) = e0, e'(0) = 0.
inline double closed_loop_error(double t, double e0, double l1, double l2) {
  // e = A exp(l1 t) + B exp(l2 t), A + B = e0, l1 A + l2 B = 0.
  const double A = e0 * l2 / (l2 - l1);
  const double B = -e0 * l1 / (l2 - l1);
  return A * std::exp(l1 * t) + B * std::exp(l2 * t);
}

}  // namespace oracle
