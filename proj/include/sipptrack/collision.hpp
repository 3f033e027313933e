#pragma once

// Continuous-time proximity tests between uniformly moving disks.
//
// All predicates are strict: two disks collide while their centers are
// closer than `clearance`; touching at exactly `clearance` is collision free.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sipptrack/geometry.hpp"
#include "sipptrack/grid_world.hpp"

namespace sipptrack {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Time interval; `hi` may be +infinity.
struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool operator==(const TimeInterval&) const = default;
};

/// p(t) = origin + velocity * (t - start) for t in [start, end].
struct LinearMotion {
  Vec2 origin;
  Vec2 velocity;
  double start = 0.0;
  double end = kInfinity;

  Vec2 position_at(double t) const { return origin + velocity * (t - start); }
  Vec2 end_position() const { return std::isfinite(end) ? position_at(end) : origin; }
};

inline LinearMotion stationary(Vec2 p, double start = 0.0, double end = kInfinity) {
  return {p, {0.0, 0.0}, start, end};
}

/// Decomposes a waypoint schedule into constant-velocity pieces plus the
/// terminal stationary piece [t_last, inf).
inline std::vector<LinearMotion> obstacle_motions(const DynamicObstacle& obs) {
  std::vector<LinearMotion> out;
  const auto& w = obs.waypoints;
  out.reserve(w.size());
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double dt = w[i + 1].t - w[i].t;
    out.push_back({w[i].pos, (w[i + 1].pos - w[i].pos) / dt, w[i].t, w[i + 1].t});
  }
  if (!w.empty()) out.push_back(stationary(w.back().pos, w.back().t));
  return out;
}

namespace detail {

/// Open root interval of a*s^2 + b*s + c < 0 for a > 0; nullopt when the
/// quadratic never goes negative.
inline std::optional<TimeInterval> negative_region(double a, double b, double c) {
  const double disc = b * b - 4.0 * a * c;
  if (!(disc > 0.0)) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (b + std::copysign(sq, b));
  double r1 = q / a;
  double r2 = (q != 0.0) ? c / q : -r1;
  if (r1 > r2) std::swap(r1, r2);
  return TimeInterval{r1, r2};
}

}  // namespace detail

/// Maximal sub-interval of the common time window in which the centers of
/// the two motions are closer than `clearance`; nullopt if they never are.
inline std::optional<TimeInterval> disk_collision_interval(const LinearMotion& a, const LinearMotion& b,
                                                           double clearance) {
  const double w0 = std::max(a.start, b.start);
  const double w1 = std::min(a.end, b.end);
  if (!(w1 >= w0)) return std::nullopt;

  const Vec2 d0 = a.position_at(w0) - b.position_at(w0);
  const Vec2 dv = a.velocity - b.velocity;
  const double A = squared_norm(dv);
  const double C = squared_norm(d0) - clearance * clearance;
  double lo = 0.0;
  double hi = 0.0;
  if (A <= 1e-18) {
    if (!(C < 0.0)) return std::nullopt;
    lo = 0.0;
    hi = kInfinity;
  } else {
    const auto roots = detail::negative_region(A, 2.0 * dot(d0, dv), C);
    if (!roots) return std::nullopt;
    lo = roots->lo;
    hi = roots->hi;
  }
  const double t_in = std::max(w0, w0 + lo);
  const double t_out = std::min(w1, w0 + hi);
  if (!(t_out > t_in)) return std::nullopt;
  return TimeInterval{t_in, t_out};
}

/// Departure times `t_d` for which a translation starting at `from` with
/// velocity `velocity`, lasting `duration`, gets closer than `clearance` to
/// `obstacle` somewhere in their common time window. The set is always a
/// single open interval (projection of a convex region), or empty.
inline std::optional<TimeInterval> departure_conflict(Vec2 from, Vec2 velocity, double duration,
                                                      const LinearMotion& obstacle, double clearance) {
  if (!(duration > 0.0)) return std::nullopt;
  const double s = obstacle.start;
  const double e = obstacle.end;
  const double c2 = clearance * clearance;
  const Vec2 w = obstacle.velocity;

  if (squared_norm(w) == 0.0 || !std::isfinite(e)) {
    // Stationary obstacle (moving pieces are always finite): find the part
    // of the path inside the clearance disk.
    const Vec2 rel = from - obstacle.origin;
    const Vec2 step = velocity * duration;
    const double A = squared_norm(step);
    if (A == 0.0) return std::nullopt;
    const auto lam = detail::negative_region(A, 2.0 * dot(rel, step), squared_norm(rel) - c2);
    if (!lam) return std::nullopt;
    const double l1 = std::max(lam->lo, 0.0);
    const double l2 = std::min(lam->hi, 1.0);
    if (!(l2 > l1)) return std::nullopt;
    const double lo = s - l2 * duration;
    const double hi = std::isfinite(e) ? e - l1 * duration : kInfinity;
    if (!(hi > lo)) return std::nullopt;
    return TimeInterval{lo, hi};
  }
  if (!(e > s)) return std::nullopt;

  // Relative offset as an affine map of (tau, t_d), tau = time into the move:
  //   q(tau, t_d) = K + a*tau - w*t_d.
  const Vec2 K = from - obstacle.origin + w * s;
  const Vec2 a = velocity - w;
  auto q = [&](double tau, double td) { return K + a * tau - w * td; };

  double best_lo = kInfinity;
  double best_hi = -kInfinity;
  auto consider = [&](double td) {
    best_lo = std::min(best_lo, td);
    best_hi = std::max(best_hi, td);
  };

  // Feasible (tau, t_d) form a parallelogram; scan its four edges.
  struct Pt {
    double tau;
    double td;
  };
  const Pt v[4] = {{0.0, s}, {0.0, e}, {duration, e - duration}, {duration, s - duration}};
  for (int i = 0; i < 4; ++i) {
    const Pt& p = v[i];
    const Pt& r = v[(i + 1) % 4];
    const Vec2 qp = q(p.tau, p.td);
    const Vec2 dq = q(r.tau, r.td) - qp;
    const double A = squared_norm(dq);
    const double C = squared_norm(qp) - c2;
    double l1 = 0.0;
    double l2 = 0.0;
    if (A <= 1e-18) {
      if (!(C < 0.0)) continue;
      l1 = 0.0;
      l2 = 1.0;
    } else {
      const auto lam = detail::negative_region(A, 2.0 * dot(qp, dq), C);
      if (!lam) continue;
      l1 = std::max(lam->lo, 0.0);
      l2 = std::min(lam->hi, 1.0);
      if (!(l2 > l1)) continue;
    }
    consider(p.td + l1 * (r.td - p.td));
    consider(p.td + l2 * (r.td - p.td));
  }

  // Extreme points of the clearance ellipse in the t_d direction.
  const double det = w.x * a.y - a.x * w.y;
  if (std::abs(det) > 1e-12 * (norm(a) * norm(w) + 1e-300)) {
    const Vec2 alpha{-a.y / det, a.x / det};
    const Vec2 beta{-w.y / det, w.x / det};
    const Vec2 dir = alpha / norm(alpha);
    for (double sign : {-1.0, 1.0}) {
      const Vec2 rel = dir * (sign * clearance) - K;
      const double td = dot(alpha, rel);
      const double tau = dot(beta, rel);
      if (tau >= 0.0 && tau <= duration && td + tau >= s && td + tau <= e) consider(td);
    }
  }

  if (!(best_hi > best_lo)) return std::nullopt;
  return TimeInterval{best_lo, best_hi};
}

/// Sorts and merges intervals that overlap or touch within `eps`.
inline std::vector<TimeInterval> merge_intervals(std::vector<TimeInterval> v, double eps = 1e-9) {
  std::sort(v.begin(), v.end(), [](const TimeInterval& x, const TimeInterval& y) {
    return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
  });
  std::vector<TimeInterval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi + eps) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace sipptrack
