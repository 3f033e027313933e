#pragma once

// Planar vector and angle helpers shared by every stage of the pipeline.

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sipptrack {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Tolerance for closed distance thresholds ("at least r away").
inline constexpr double kGeomEps = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr double squared_norm(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Wraps an angle into [0, 2*pi).
inline double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Signed shortest rotation taking `from` onto `to`, in (-pi, pi].
inline double shortest_angle_delta(double from, double to) {
  double d = std::remainder(to - from, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  return d;
}

/// Unsigned shortest angular distance, in [0, pi].
inline double angular_distance(double a, double b) {
  return std::abs(shortest_angle_delta(a, b));
}

/// Heading of a displacement, in [0, 2*pi).
inline double heading_of(Vec2 d) { return normalize_angle(std::atan2(d.y, d.x)); }

struct Box {
  Vec2 lo;
  Vec2 hi;
};

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = squared_norm(ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * s);
}

inline double point_box_distance(Vec2 p, const Box& box) {
  const double dx = std::max({box.lo.x - p.x, 0.0, p.x - box.hi.x});
  const double dy = std::max({box.lo.y - p.y, 0.0, p.y - box.hi.y});
  return std::hypot(dx, dy);
}

/// Liang-Barsky clip; true when the closed segment touches the closed box.
inline bool segment_intersects_box(Vec2 a, Vec2 b, const Box& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - box.lo.x, box.hi.x - a.x, a.y - box.lo.y, box.hi.y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

/// Exact distance between a segment and an axis-aligned box (0 when they touch).
inline double segment_box_distance(Vec2 a, Vec2 b, const Box& box) {
  if (segment_intersects_box(a, b, box)) return 0.0;
  double best = std::min(point_box_distance(a, box), point_box_distance(b, box));
  const Vec2 corners[4] = {box.lo, {box.hi.x, box.lo.y}, box.hi, {box.lo.x, box.hi.y}};
  for (const Vec2& c : corners) best = std::min(best, point_segment_distance(c, a, b));
  return best;
}

}  // namespace sipptrack
