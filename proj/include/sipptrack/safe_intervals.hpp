#pragma once

// Per-cell safe-interval timelines and earliest collision-free departure
// times, with the dynamic clearance inflated to 2r + delta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "sipptrack/collision.hpp"
#include "sipptrack/grid_world.hpp"

namespace sipptrack {

/// Contiguous collision-free stay at a configuration. `end` may be +inf.
struct SafeInterval {
  double begin = 0.0;
  double end = kInfinity;

  bool contains(double t) const { return t >= begin && t <= end; }
  bool unbounded() const { return std::isinf(end); }
  bool operator==(const SafeInterval&) const = default;
};

struct CellTimeline {
  int cell = 0;
  std::vector<SafeInterval> intervals;
};

/// Safe intervals shorter than this are dropped as numerical noise.
inline constexpr double kMinSafeInterval = 1e-6;

/// Complement of merged collision intervals within [0, inf).
inline std::vector<SafeInterval> complement_of(const std::vector<TimeInterval>& merged_collisions) {
  std::vector<SafeInterval> out;
  double cursor = 0.0;
  for (const auto& c : merged_collisions) {
    if (c.hi <= 0.0) continue;
    if (c.lo - cursor >= kMinSafeInterval) out.push_back({cursor, c.lo});
    cursor = std::max(cursor, c.hi);
    if (std::isinf(cursor)) return out;
  }
  out.push_back({cursor, kInfinity});
  return out;
}

/// Obstacle motion pieces bucketed by the grid cells their clearance-inflated
/// bounding boxes touch (grown by an extra half cell so point queries at
/// spacing <= one cell find every relevant piece).
class ObstacleIndex {
 public:
  struct Entry {
    int obstacle = 0;
    LinearMotion motion;
  };

  ObstacleIndex() = default;
  ObstacleIndex(const GridMap& map, const std::vector<DynamicObstacle>& obstacles, double clearance)
      : width_(map.width()), height_(map.height()), cell_size_(map.cell_size()), clearance_(clearance) {
    buckets_.assign(static_cast<std::size_t>(width_) * height_, {});
    const double margin = clearance + 0.5 * cell_size_;
    for (int i = 0; i < static_cast<int>(obstacles.size()); ++i) {
      for (const LinearMotion& m : obstacle_motions(obstacles[static_cast<std::size_t>(i)])) {
        const int idx = static_cast<int>(entries_.size());
        entries_.push_back({i, m});
        const Vec2 a = m.origin;
        const Vec2 b = m.end_position();
        const int x0 = std::max(0, static_cast<int>(std::floor((std::min(a.x, b.x) - margin) / cell_size_)));
        const int x1 = std::min(width_ - 1, static_cast<int>(std::floor((std::max(a.x, b.x) + margin) / cell_size_)));
        const int y0 = std::max(0, static_cast<int>(std::floor((std::min(a.y, b.y) - margin) / cell_size_)));
        const int y1 = std::min(height_ - 1, static_cast<int>(std::floor((std::max(a.y, b.y) + margin) / cell_size_)));
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) buckets_[static_cast<std::size_t>(y * width_ + x)].push_back(idx);
        }
      }
    }
    stamp_.assign(entries_.size(), 0);
  }

  double clearance() const { return clearance_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Motion pieces that may come within `clearance` of a point in cell (x, y).
  const std::vector<int>& bucket(int x, int y) const {
    static const std::vector<int> kEmpty;
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return kEmpty;
    return buckets_[static_cast<std::size_t>(y * width_ + x)];
  }

  /// Candidate pieces for a straight move a -> b, each reported once. Not
  /// thread-safe (uses an internal visit stamp); use one index per thread.
  template <class Fn>
  void for_each_near_segment(Vec2 a, Vec2 b, Fn&& fn) const {
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    const double len = distance(a, b);
    const int samples = std::max(1, static_cast<int>(std::ceil(len / cell_size_)));
    for (int k = 0; k <= samples; ++k) {
      const Vec2 p = a + (b - a) * (static_cast<double>(k) / samples);
      const int x = static_cast<int>(std::floor(p.x / cell_size_));
      const int y = static_cast<int>(std::floor(p.y / cell_size_));
      for (int idx : bucket(x, y)) {
        if (stamp_[static_cast<std::size_t>(idx)] == epoch_) continue;
        stamp_[static_cast<std::size_t>(idx)] = epoch_;
        fn(entries_[static_cast<std::size_t>(idx)]);
      }
    }
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 1.0;
  double clearance_ = 0.0;
  std::vector<Entry> entries_;
  std::vector<std::vector<int>> buckets_;
  mutable std::vector<std::uint32_t> stamp_;
  mutable std::uint32_t epoch_ = 0;
};

/// Safe intervals of a stationary robot at `p` against the indexed obstacles.
inline std::vector<SafeInterval> point_timeline(Vec2 p, const ObstacleIndex& index, double cell_size) {
  std::vector<TimeInterval> hits;
  const LinearMotion here = stationary(p);
  const int x = static_cast<int>(std::floor(p.x / cell_size));
  const int y = static_cast<int>(std::floor(p.y / cell_size));
  for (int idx : index.bucket(x, y)) {
    const auto& e = index.entries()[static_cast<std::size_t>(idx)];
    if (auto c = disk_collision_interval(here, e.motion, index.clearance())) hits.push_back(*c);
  }
  return complement_of(merge_intervals(std::move(hits)));
}

/// Timeline for every un-blocked cell (blocked cells get an empty list).
/// Clearance is r_robot + r_obstacle + delta, i.e. 2r + delta.
inline std::vector<CellTimeline> build_cell_timelines(const GridMap& map,
                                                      const std::vector<DynamicObstacle>& obstacles,
                                                      double robot_radius, double delta) {
  const double obstacle_radius = obstacles.empty() ? robot_radius : obstacles.front().radius;
  const ObstacleIndex index(map, obstacles, robot_radius + obstacle_radius + delta);
  std::vector<CellTimeline> out(static_cast<std::size_t>(map.cell_count()));
  for (int id = 0; id < map.cell_count(); ++id) {
    out[static_cast<std::size_t>(id)].cell = id;
    if (map.blocked(map.cell(id))) continue;
    out[static_cast<std::size_t>(id)].intervals = point_timeline(map.center(id), index, map.cell_size());
  }
  return out;
}

/// Earliest departure t_d in [max(ready, target.begin - d), min(source_end, target.end - d)],
/// d = |to - from| / speed, such that the straight translation keeps every
/// indexed obstacle at or beyond the index clearance. Waiting at `from`
/// before t_d is assumed safe (the caller's source interval covers it).
inline std::optional<double> earliest_safe_departure(Vec2 from, Vec2 to, double speed, double ready,
                                                     double source_end, const SafeInterval& target,
                                                     const ObstacleIndex& index) {
  const double len = distance(from, to);
  const double d = len / speed;
  const double lower = std::max(ready, target.begin - d);
  const double upper = std::min(source_end, target.end - d);
  if (!(lower <= upper)) return std::nullopt;
  if (len == 0.0) return lower;

  const Vec2 vel = (to - from) / d;
  std::vector<TimeInterval> bad;
  index.for_each_near_segment(from, to, [&](const ObstacleIndex::Entry& e) {
    if (e.motion.end < lower || e.motion.start > upper + d) return;
    if (auto c = departure_conflict(from, vel, d, e.motion, index.clearance())) {
      if (c->hi > lower && c->lo < upper) bad.push_back(*c);
    }
  });
  double t = lower;
  for (const auto& b : merge_intervals(std::move(bad))) {
    if (b.lo >= t) break;
    if (t < b.hi) t = b.hi;
  }
  // A conflict lasting forever (obstacle parked on the path) pushes t to inf.
  if (!std::isfinite(t) || t > upper) return std::nullopt;
  return t;
}

/// Convenience overload working directly on obstacle schedules.
inline std::optional<double> earliest_safe_departure(const Configuration& from, Vec2 to, double speed,
                                                     const SafeInterval& window, const SafeInterval& target,
                                                     const GridMap& map,
                                                     const std::vector<DynamicObstacle>& obstacles,
                                                     double robot_radius, double delta) {
  const double obstacle_radius = obstacles.empty() ? robot_radius : obstacles.front().radius;
  const ObstacleIndex index(map, obstacles, robot_radius + obstacle_radius + delta);
  return earliest_safe_departure(from.pos, to, speed, window.begin, window.end, target, index);
}

/// Everything the search needs for one (instance, delta) pair: timelines
/// plus the obstacle index used for move checks.
struct SafeIntervalMap {
  ObstacleIndex index;
  std::vector<std::vector<SafeInterval>> intervals;  // by cell id
  std::vector<int> offset;                           // first flat interval id per cell

  int flat_id(int cell, int interval) const { return offset[static_cast<std::size_t>(cell)] + interval; }
  int flat_count() const { return offset.empty() ? 0 : offset.back(); }
};

inline SafeIntervalMap build_safe_interval_map(const Instance& inst, double delta) {
  SafeIntervalMap sim;
  const double obstacle_radius = inst.obstacles.empty() ? inst.robot.radius : inst.obstacles.front().radius;
  sim.index = ObstacleIndex(inst.map, inst.obstacles, inst.robot.radius + obstacle_radius + delta);
  const int n = inst.map.cell_count();
  sim.intervals.resize(static_cast<std::size_t>(n));
  sim.offset.resize(static_cast<std::size_t>(n) + 1, 0);
  for (int id = 0; id < n; ++id) {
    if (!inst.map.blocked(inst.map.cell(id))) {
      sim.intervals[static_cast<std::size_t>(id)] = point_timeline(inst.map.center(id), sim.index, inst.map.cell_size());
    }
    sim.offset[static_cast<std::size_t>(id) + 1] =
        sim.offset[static_cast<std::size_t>(id)] + static_cast<int>(sim.intervals[static_cast<std::size_t>(id)].size());
  }
  return sim;
}

}  // namespace sipptrack
