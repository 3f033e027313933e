#pragma once

// Static occupancy grid, robot/obstacle descriptions and the geometric
// queries the planner and the simulator share.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sipptrack/geometry.hpp"

namespace sipptrack {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct CellIndex {
  int x = 0;
  int y = 0;
  bool operator==(const CellIndex&) const = default;
};

/// W x H occupancy grid with square cells of side `cell_size` meters.
/// Cell (i, j) spans [i*l, (i+1)*l] x [j*l, (j+1)*l]; row j = 0 is y = 0.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, double cell_size, std::vector<bool> blocked)
      : width_(width), height_(height), cell_size_(cell_size), blocked_(std::move(blocked)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("GridMap: empty map");
    if (!(cell_size > 0.0)) throw std::invalid_argument("GridMap: cell_size must be positive");
    if (blocked_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw std::invalid_argument("GridMap: occupancy size mismatch");
    }
  }

  static GridMap empty(int width, int height, double cell_size = 1.0) {
    return GridMap(width, height, cell_size,
                   std::vector<bool>(static_cast<std::size_t>(width) * height, false));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  int cell_count() const { return width_ * height_; }

  bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width_ && iy < height_; }
  int id(int ix, int iy) const { return iy * width_ + ix; }
  int id(CellIndex c) const { return id(c.x, c.y); }
  CellIndex cell(int id) const { return {id % width_, id / width_}; }

  /// Anything outside the grid reports blocked.
  bool blocked(int ix, int iy) const {
    return !in_bounds(ix, iy) || blocked_[static_cast<std::size_t>(id(ix, iy))];
  }
  bool blocked(CellIndex c) const { return blocked(c.x, c.y); }

  void set_blocked(int ix, int iy, bool value) {
    if (!in_bounds(ix, iy)) throw std::out_of_range("GridMap::set_blocked");
    blocked_[static_cast<std::size_t>(id(ix, iy))] = value;
  }

  Vec2 center(int ix, int iy) const { return {(ix + 0.5) * cell_size_, (iy + 0.5) * cell_size_}; }
  Vec2 center(CellIndex c) const { return center(c.x, c.y); }
  Vec2 center(int id) const { return center(cell(id)); }

  CellIndex cell_at(Vec2 p) const {
    return {static_cast<int>(std::floor(p.x / cell_size_)),
            static_cast<int>(std::floor(p.y / cell_size_))};
  }

  Box cell_box(int ix, int iy) const {
    return {{ix * cell_size_, iy * cell_size_}, {(ix + 1) * cell_size_, (iy + 1) * cell_size_}};
  }

  /// True when `p` is (numerically) the center of an un-blocked cell.
  bool is_free_center(Vec2 p) const {
    const CellIndex c = cell_at(p);
    return !blocked(c) && distance(center(c), p) < 1e-6 * cell_size_;
  }

  std::size_t free_cell_count() const {
    std::size_t n = 0;
    for (bool b : blocked_) n += b ? 0 : 1;
    return n;
  }

  bool operator==(const GridMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 1.0;
  std::vector<bool> blocked_;
};

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

/// Parses "width height cell_size" followed by `height` rows of `width`
/// characters from {'.', '@'}. The first row is y = 0.
inline GridMap load_map(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError(1, "missing header");

  int width = 0;
  int height = 0;
  double cell_size = 0.0;
  {
    const std::string header(lines[0]);
    char trailing = 0;
    if (std::sscanf(header.c_str(), "%d %d %lf %c", &width, &height, &cell_size, &trailing) != 3) {
      throw ParseError(1, "malformed header, expected 'width height cell_size'");
    }
    if (width <= 0 || height <= 0) throw ParseError(1, "map dimensions must be positive");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ParseError(1, "cell_size must be positive");
  }
  if (static_cast<int>(lines.size()) - 1 < height) {
    throw ParseError(static_cast<int>(lines.size()) + 1, "expected " + std::to_string(height) + " rows");
  }
  if (static_cast<int>(lines.size()) - 1 > height) {
    throw ParseError(height + 2, "unexpected extra row");
  }

  std::vector<bool> blocked(static_cast<std::size_t>(width) * height, false);
  for (int row = 0; row < height; ++row) {
    const std::string_view line = lines[static_cast<std::size_t>(row) + 1];
    const int line_no = row + 2;
    if (static_cast<int>(line.size()) != width) {
      throw ParseError(line_no, "row has " + std::to_string(line.size()) + " cells, expected " +
                                    std::to_string(width));
    }
    for (int col = 0; col < width; ++col) {
      const char c = line[static_cast<std::size_t>(col)];
      if (c == '@') {
        blocked[static_cast<std::size_t>(row) * width + col] = true;
      } else if (c != '.') {
        throw ParseError(line_no, std::string("illegal character '") + c + "'");
      }
    }
  }
  return GridMap(width, height, cell_size, std::move(blocked));
}

inline std::string map_to_text(const GridMap& map) {
  char header[96];
  std::snprintf(header, sizeof(header), "%d %d %.17g\n", map.width(), map.height(), map.cell_size());
  std::string out(header);
  out.reserve(out.size() + static_cast<std::size_t>(map.width() + 1) * map.height());
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out.push_back(map.blocked(x, y) ? '@' : '.');
    out.push_back('\n');
  }
  return out;
}

/// True iff every point of segment a-b keeps distance >= r from every blocked
/// cell (the outside of the grid counts as blocked). Distance exactly r is clear.
inline bool line_of_sight_clear(Vec2 a, Vec2 b, double r, const GridMap& map) {
  const double l = map.cell_size();
  const int x0 = static_cast<int>(std::floor((std::min(a.x, b.x) - r) / l));
  const int x1 = static_cast<int>(std::floor((std::max(a.x, b.x) + r) / l));
  const int y0 = static_cast<int>(std::floor((std::min(a.y, b.y) - r) / l));
  const int y1 = static_cast<int>(std::floor((std::max(a.y, b.y) + r) / l));
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      if (!map.blocked(ix, iy)) continue;
      if (segment_box_distance(a, b, map.cell_box(ix, iy)) < r - kGeomEps) return false;
    }
  }
  return true;
}

/// Distance from `p` to the nearest blocked cell, searched within `radius`.
/// Returns `radius` when nothing closer exists.
inline double static_clearance(Vec2 p, double radius, const GridMap& map) {
  const double l = map.cell_size();
  const int x0 = static_cast<int>(std::floor((p.x - radius) / l));
  const int x1 = static_cast<int>(std::floor((p.x + radius) / l));
  const int y0 = static_cast<int>(std::floor((p.y - radius) / l));
  const int y1 = static_cast<int>(std::floor((p.y + radius) / l));
  double best = radius;
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      if (map.blocked(ix, iy)) best = std::min(best, point_box_distance(p, map.cell_box(ix, iy)));
    }
  }
  return best;
}

struct Configuration {
  Vec2 pos;
  double heading = 0.0;  // radians, [0, 2*pi)
  bool operator==(const Configuration&) const = default;
};

struct Waypoint {
  Vec2 pos;
  double t = 0.0;
  bool operator==(const Waypoint&) const = default;
};

/// Disk moving through timed waypoints at piecewise-constant velocity; it
/// stays at the last waypoint forever. Heading is irrelevant for a disk.
struct DynamicObstacle {
  double radius = 0.5;
  std::vector<Waypoint> waypoints;

  double end_time() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }
  bool operator==(const DynamicObstacle&) const = default;
};

/// Throws std::invalid_argument when the schedule breaks the obstacle invariants.
inline void validate_obstacle(const DynamicObstacle& obs, const GridMap& map) {
  if (obs.waypoints.empty()) throw std::invalid_argument("obstacle without waypoints");
  if (!(obs.radius > 0.0)) throw std::invalid_argument("obstacle radius must be positive");
  if (obs.waypoints.front().t != 0.0) throw std::invalid_argument("obstacle schedule must start at t=0");
  for (std::size_t i = 0; i < obs.waypoints.size(); ++i) {
    if (!map.is_free_center(obs.waypoints[i].pos)) {
      throw std::invalid_argument("obstacle waypoint is not a free cell center");
    }
    if (i > 0 && !(obs.waypoints[i].t > obs.waypoints[i - 1].t)) {
      throw std::invalid_argument("obstacle waypoint times must be strictly increasing");
    }
  }
}

inline Vec2 obstacle_position_at(const DynamicObstacle& obs, double t) {
  const auto& w = obs.waypoints;
  if (w.empty()) return {};
  if (t <= w.front().t) return w.front().pos;
  if (t >= w.back().t) return w.back().pos;
  const auto it = std::upper_bound(w.begin(), w.end(), t,
                                   [](double value, const Waypoint& p) { return value < p.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double s = (t - a.t) / (b.t - a.t);
  return a.pos + (b.pos - a.pos) * s;
}

struct RobotSpec {
  double radius = 0.5;                // r = 0.5 l
  double v_max = 1.0;                 // m/s
  double omega_max = kPi;             // rad/s (180 deg/s)
  bool operator==(const RobotSpec&) const = default;
};

struct Instance {
  GridMap map;
  std::vector<DynamicObstacle> obstacles;
  Configuration start;
  Vec2 goal;
  RobotSpec robot;
};

/// Throws std::invalid_argument describing the first violated invariant.
inline void validate_instance(const Instance& inst) {
  if (!inst.map.is_free_center(inst.start.pos)) throw std::invalid_argument("start is not a free cell center");
  if (!inst.map.is_free_center(inst.goal)) throw std::invalid_argument("goal is not a free cell center");
  if (!(inst.robot.radius > 0.0) || !(inst.robot.v_max > 0.0) || !(inst.robot.omega_max > 0.0)) {
    throw std::invalid_argument("robot radius and speeds must be positive");
  }
  for (const auto& obs : inst.obstacles) {
    validate_obstacle(obs, inst.map);
    if (distance(obs.waypoints.front().pos, inst.start.pos) < obs.radius + inst.robot.radius - kGeomEps) {
      throw std::invalid_argument("start collides with an obstacle at t=0");
    }
  }
}

}  // namespace sipptrack
