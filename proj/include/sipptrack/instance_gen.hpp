#pragma once

// Seeded random problem instances: start/goal pair plus mutually
// non-colliding obstacle random walks on a given map.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sipptrack/collision.hpp"
#include "sipptrack/grid_world.hpp"

namespace sipptrack {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// mt19937_64 with distribution code spelled out so that sequences do not
/// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  bool bernoulli(double p) { return uniform() < p; }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct InstanceOptions {
  RobotSpec robot;
  double obstacle_speed = 1.0;        // m/s, same as the robot
  double horizon = 200.0;             // s, walks run at least this long, then park
  double wait_probability = 0.15;
  double persistence = 0.6;           // chance to keep the previous heading
  double min_wait = 0.5;
  double max_wait = 2.0;
  double start_keepout = 2.0;         // m, no obstacle this close to start at t=0
  double goal_keepout = 2.0;          // m, obstacle centers never come this close to the goal
  double min_start_goal_fraction = 0.1;  // of the map diagonal
  int max_obstacle_attempts = 60;
  int max_actions_per_try = 12;
  int max_hop = 2;                    // 1: 8-neighborhood; 2 adds knight-like moves
};

namespace detail {

struct CommittedObstacle {
  std::vector<LinearMotion> pieces;  // sorted by start, last one unbounded
};

inline bool conflicts(const LinearMotion& m, const std::vector<CommittedObstacle>& others, double clearance) {
  for (const auto& o : others) {
    auto it = std::lower_bound(o.pieces.begin(), o.pieces.end(), m.start,
                               [](const LinearMotion& p, double t) { return p.end < t; });
    for (; it != o.pieces.end() && it->start <= m.end; ++it) {
      if (disk_collision_interval(m, *it, clearance)) return true;
    }
  }
  return false;
}

/// Move offsets with Chebyshev length <= max_hop and coprime components, so
/// every direction appears once.
inline std::vector<CellIndex> hop_offsets(int max_hop) {
  std::vector<CellIndex> out;
  for (int dy = -max_hop; dy <= max_hop; ++dy) {
    for (int dx = -max_hop; dx <= max_hop; ++dx) {
      if (dx == 0 && dy == 0) continue;
      if (std::gcd(std::abs(dx), std::abs(dy)) != 1) continue;
      out.push_back({dx, dy});
    }
  }
  return out;
}

}  // namespace detail

inline Instance generate_instance(const GridMap& map, int n_obstacles, std::uint64_t seed,
                                  const InstanceOptions& opt = {}) {
  if (n_obstacles < 0) throw std::invalid_argument("negative obstacle count");
  Rng rng(seed);
  std::vector<int> free_cells;
  for (int id = 0; id < map.cell_count(); ++id) {
    if (!map.blocked(map.cell(id))) free_cells.push_back(id);
  }
  if (free_cells.size() < static_cast<std::size_t>(n_obstacles) + 2) {
    throw GenerationError("not enough free cells for obstacles, start and goal");
  }

  Instance inst;
  inst.map = map;
  inst.robot = opt.robot;
  const double r = opt.robot.radius;
  const double clearance = 2.0 * r;

  // Start and goal.
  const double diag = std::hypot(map.width(), map.height()) * map.cell_size();
  const double min_sg = opt.min_start_goal_fraction * diag;
  bool found = false;
  for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
    const Vec2 s = map.center(free_cells[rng.index(free_cells.size())]);
    const Vec2 g = map.center(free_cells[rng.index(free_cells.size())]);
    if (s == g || distance(s, g) < min_sg) continue;
    inst.start = {s, normalize_angle(rng.uniform(0.0, kTwoPi))};
    inst.goal = g;
    found = true;
  }
  if (!found) throw GenerationError("could not place start and goal");

  std::vector<detail::CommittedObstacle> committed;
  std::vector<Vec2> initial_positions;
  const double step_time_unit = map.cell_size() / opt.obstacle_speed;
  const std::vector<CellIndex> offsets = detail::hop_offsets(std::max(1, opt.max_hop));

  for (int k = 0; k < n_obstacles; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < opt.max_obstacle_attempts && !placed; ++attempt) {
      // Initial cell.
      std::optional<Vec2> origin;
      for (int tries = 0; tries < 200 && !origin; ++tries) {
        const Vec2 p = map.center(free_cells[rng.index(free_cells.size())]);
        if (distance(p, inst.start.pos) < opt.start_keepout) continue;
        if (distance(p, inst.goal) < opt.goal_keepout) continue;
        bool ok = true;
        for (const Vec2& q : initial_positions) {
          if (distance(p, q) < clearance) {
            ok = false;
            break;
          }
        }
        if (ok) origin = p;
      }
      if (!origin) continue;

      DynamicObstacle obs;
      obs.radius = r;
      obs.waypoints.push_back({*origin, 0.0});
      std::vector<LinearMotion> pieces;
      Vec2 pos = *origin;
      double t = 0.0;
      int last_dir = -1;
      bool failed = false;
      int extra = 0;

      while (true) {
        if (t >= opt.horizon) {
          const LinearMotion rest = stationary(pos, t);
          if (!detail::conflicts(rest, committed, clearance)) {
            pieces.push_back(rest);
            break;
          }
          if (++extra > 60) {
            failed = true;
            break;
          }
        }
        // Candidate actions in preference order.
        std::vector<int> dirs(offsets.size());
        std::iota(dirs.begin(), dirs.end(), 0);
        rng.shuffle(dirs);
        std::vector<int> order;  // direction index, or -1 for wait
        if (last_dir >= 0 && rng.bernoulli(opt.persistence)) order.push_back(last_dir);
        if (rng.bernoulli(opt.wait_probability)) order.push_back(-1);
        for (int d : dirs) order.push_back(d);
        order.push_back(-1);

        bool moved = false;
        int tried = 0;
        for (int choice : order) {
          if (tried >= opt.max_actions_per_try) break;
          if (choice < 0) {
            ++tried;
            const double dur = rng.uniform(opt.min_wait, opt.max_wait);
            const LinearMotion m = stationary(pos, t, t + dur);
            if (detail::conflicts(m, committed, clearance)) continue;
            pieces.push_back(m);
            t += dur;
            obs.waypoints.push_back({pos, t});
            last_dir = -1;
            moved = true;
            break;
          }
          const CellIndex c = map.cell_at(pos);
          const CellIndex off = offsets[static_cast<std::size_t>(choice)];
          const CellIndex n{c.x + off.x, c.y + off.y};
          if (map.blocked(n)) continue;
          const Vec2 next = map.center(n);
          if (!line_of_sight_clear(pos, next, r, map)) continue;
          if (point_segment_distance(inst.goal, pos, next) < opt.goal_keepout) continue;
          ++tried;
          const double dur = std::hypot(off.x, off.y) * step_time_unit;
          const LinearMotion m{pos, (next - pos) / dur, t, t + dur};
          if (detail::conflicts(m, committed, clearance)) continue;
          pieces.push_back(m);
          t += dur;
          pos = next;
          obs.waypoints.push_back({pos, t});
          last_dir = choice;
          moved = true;
          break;
        }
        if (!moved) {
          failed = true;
          break;
        }
      }
      if (failed) continue;

      committed.push_back({std::move(pieces)});
      initial_positions.push_back(*origin);
      inst.obstacles.push_back(std::move(obs));
      placed = true;
    }
    if (!placed) {
      throw GenerationError("could not place obstacle " + std::to_string(k) + " after " +
                            std::to_string(opt.max_obstacle_attempts) + " attempts");
    }
  }
  return inst;
}

}  // namespace sipptrack
