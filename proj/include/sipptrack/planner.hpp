#pragma once

// Safe-interval heuristic search over (configuration, safe interval) states.
//
// Three modes share one search loop:
//   sipp            4-connected cardinal moves, heading ignored.
//   any_angle       8-connected moves plus line-of-sight shortcuts from the
//                   parent state, heading ignored.
//   any_angle_turns as any_angle, but every translation is preceded by a
//                   timed rotate-in-place toward the move direction, and
//                   duplicate states at one (cell, interval) are compared
//                   with the rotation time between their headings.

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "sipptrack/geometry.hpp"
#include "sipptrack/grid_world.hpp"
#include "sipptrack/safe_intervals.hpp"

namespace sipptrack {

enum class PlannerMode { sipp, any_angle, any_angle_turns };

inline std::string_view to_string(PlannerMode m) {
  switch (m) {
    case PlannerMode::sipp:
      return "sipp";
    case PlannerMode::any_angle:
      return "aa";
    case PlannerMode::any_angle_turns:
      return "aat";
  }
  return "?";
}

inline std::optional<PlannerMode> parse_planner_mode(std::string_view s) {
  if (s == "sipp") return PlannerMode::sipp;
  if (s == "aa") return PlannerMode::any_angle;
  if (s == "aat") return PlannerMode::any_angle_turns;
  return std::nullopt;
}

enum class ActionKind { wait, rotate, translate };

inline std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::wait:
      return "wait";
    case ActionKind::rotate:
      return "rotate";
    case ActionKind::translate:
      return "translate";
  }
  return "?";
}

inline std::optional<ActionKind> parse_action_kind(std::string_view s) {
  if (s == "wait") return ActionKind::wait;
  if (s == "rotate") return ActionKind::rotate;
  if (s == "translate") return ActionKind::translate;
  return std::nullopt;
}

/// Uniform motion between two rest configurations.
struct PlanAction {
  ActionKind kind = ActionKind::wait;
  Configuration from;
  Configuration to;
  double t_start = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_start; }
  Configuration at(double t) const {
    const double T = duration();
    const double s = T > 0.0 ? std::clamp((t - t_start) / T, 0.0, 1.0) : 1.0;
    switch (kind) {
      case ActionKind::translate:
        return {from.pos + (to.pos - from.pos) * s, from.heading};
      case ActionKind::rotate:
        return {from.pos, normalize_angle(from.heading + shortest_angle_delta(from.heading, to.heading) * s)};
      case ActionKind::wait:
        break;
    }
    return from;
  }
};

struct Plan {
  std::vector<PlanAction> actions;
  Configuration start;
  double arrival = 0.0;
  PlannerMode mode = PlannerMode::any_angle_turns;
  double delta = 0.0;

  Configuration final_configuration() const { return actions.empty() ? start : actions.back().to; }

  /// Planned configuration at time t (start before 0, goal after arrival).
  Configuration at(double t) const {
    if (actions.empty() || t <= actions.front().t_start) return actions.empty() ? start : actions.front().from;
    if (t >= actions.back().t_end) return actions.back().to;
    const auto it = std::upper_bound(actions.begin(), actions.end(), t,
                                     [](double v, const PlanAction& a) { return v < a.t_end; });
    return it->at(t);
  }
};

/// Throws std::logic_error when the plan is not time-contiguous or an action
/// breaks its kind's geometry.
inline void validate_plan(const Plan& plan, double tol = 1e-9) {
  Configuration cur = plan.start;
  double t = 0.0;
  for (const auto& a : plan.actions) {
    if (std::abs(a.t_start - t) > tol) throw std::logic_error("plan actions are not time-contiguous");
    if (distance(a.from.pos, cur.pos) > tol || angular_distance(a.from.heading, cur.heading) > tol) {
      throw std::logic_error("plan actions are not configuration-contiguous");
    }
    if (a.t_end < a.t_start) throw std::logic_error("action ends before it starts");
    if (a.kind != ActionKind::translate && distance(a.from.pos, a.to.pos) > tol) {
      throw std::logic_error("wait/rotate must keep position");
    }
    if (a.kind != ActionKind::rotate && angular_distance(a.from.heading, a.to.heading) > tol) {
      throw std::logic_error("wait/translate must keep heading");
    }
    cur = a.to;
    t = a.t_end;
  }
  if (std::abs(t - plan.arrival) > tol) throw std::logic_error("arrival does not match last action");
}

struct PlannerOptions {
  double v_max = 1.0;         // m/s
  double omega_max = kPi;     // rad/s
  std::size_t max_expansions = 0;  // 0 = unlimited
};

struct SearchStats {
  std::size_t expansions = 0;
  std::size_t generated = 0;
  std::vector<double> expanded_f;  // f of every expanded state, in order
  bool record_f = false;
};

/// Straight-line travel time; ignores rotation so it stays admissible in
/// every mode.
inline double heuristic(Vec2 pos, Vec2 goal, double v_max) { return distance(pos, goal) / v_max; }

/// Time to turn in place between two headings along the shorter direction.
inline double dur_rot(double heading_a, double heading_b, double omega_max) {
  return angular_distance(heading_a, heading_b) / omega_max;
}

namespace detail {

class SippSearch {
 public:
  SippSearch(const Instance& inst, const SafeIntervalMap& sim, PlannerMode mode, const PlannerOptions& opt,
             SearchStats* stats)
      : inst_(inst), map_(inst.map), sim_(sim), mode_(mode), opt_(opt), stats_(stats) {
    visited_.resize(static_cast<std::size_t>(sim.flat_count()));
  }

  std::optional<Plan> run(double delta) {
    const CellIndex sc = map_.cell_at(inst_.start.pos);
    const CellIndex gc = map_.cell_at(inst_.goal);
    const int start_cell = map_.id(sc);
    goal_cell_ = map_.id(gc);
    const auto& start_ivs = sim_.intervals[static_cast<std::size_t>(start_cell)];
    if (start_ivs.empty() || start_ivs.front().begin > 0.0) return std::nullopt;
    const auto& goal_ivs = sim_.intervals[static_cast<std::size_t>(goal_cell_)];
    if (goal_ivs.empty() || !goal_ivs.back().unbounded()) return std::nullopt;
    goal_interval_ = static_cast<int>(goal_ivs.size()) - 1;

    Node start;
    start.cell = start_cell;
    start.interval = 0;
    start.heading = inst_.start.heading;
    start.g = 0.0;
    start.departure = 0.0;
    start.f = h(start_cell);
    push(start);

    std::vector<Node> successors;
    while (!open_.empty()) {
      const QueueEntry top = open_.top();
      open_.pop();
      Node& s = nodes_[static_cast<std::size_t>(top.id)];
      if (!s.open) continue;
      s.open = false;
      if (stats_) {
        ++stats_->expansions;
        if (stats_->record_f) stats_->expanded_f.push_back(s.f);
      }
      if (s.cell == goal_cell_ && s.interval == goal_interval_) return reconstruct(top.id, delta);
      if (opt_.max_expansions && ++local_expansions_ >= opt_.max_expansions) return std::nullopt;

      // `s` may dangle once successors are pushed.
      const int s_id = top.id;
      const int s_cell = s.cell;
      const int parent = s.parent;
      const CellIndex c = map_.cell(s_cell);
      const int n_dirs = mode_ == PlannerMode::sipp ? 4 : 8;
      for (int k = 0; k < n_dirs; ++k) {
        const CellIndex off = neighbor(k);
        const CellIndex nc{c.x + off.x, c.y + off.y};
        if (map_.blocked(nc)) continue;
        const int n_cell = map_.id(nc);
        successors.clear();
        // The shortcut through the parent goes first so that it wins ties
        // against the two-leg path.
        if (mode_ != PlannerMode::sipp && parent >= 0) {
          const int p_cell = nodes_[static_cast<std::size_t>(parent)].cell;
          if (p_cell != n_cell &&
              line_of_sight_clear(map_.center(p_cell), map_.center(n_cell), inst_.robot.radius, map_)) {
            generate(parent, n_cell, successors);
          }
        }
        if (line_of_sight_clear(map_.center(s_cell), map_.center(n_cell), inst_.robot.radius, map_)) {
          generate(s_id, n_cell, successors);
        }
        for (Node& cand : successors) consider(cand);
      }
    }
    return std::nullopt;
  }

 private:
  struct Node {
    int cell = 0;
    int interval = 0;
    double heading = 0.0;
    double g = 0.0;
    double f = 0.0;
    double departure = 0.0;
    int parent = -1;
    bool open = true;
  };

  struct QueueEntry {
    double f;
    double g;
    int cell;
    int id;
  };
  struct QueueOrder {
    // Lowest f first; ties: larger g, then smaller cell id, then creation order.
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
      if (a.f != b.f) return a.f > b.f;
      if (a.g != b.g) return a.g < b.g;
      if (a.cell != b.cell) return a.cell > b.cell;
      return a.id > b.id;
    }
  };

  static CellIndex neighbor(int k) {
    // Cardinal directions first so sipp mode uses k < 4.
    static constexpr CellIndex kOffsets[8] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    return kOffsets[k];
  }

  double h(int cell) const { return heuristic(map_.center(cell), inst_.goal, opt_.v_max); }

  double rotation_between(double a, double b) const {
    return mode_ == PlannerMode::any_angle_turns ? dur_rot(a, b, opt_.omega_max) : 0.0;
  }

  void push(Node n) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    visited_[static_cast<std::size_t>(sim_.flat_id(n.cell, n.interval))].push_back(id);
    open_.push({n.f, n.g, n.cell, id});
    if (stats_) ++stats_->generated;
  }

  // getSuccessors(cfg, from): one state per reachable safe interval of `cell`.
  void generate(int from_id, int cell, std::vector<Node>& out) const {
    const Node& from = nodes_[static_cast<std::size_t>(from_id)];
    const Vec2 a = map_.center(from.cell);
    const Vec2 b = map_.center(cell);
    const double d = distance(a, b) / opt_.v_max;
    double heading = from.heading;
    double ready = from.g;
    if (mode_ == PlannerMode::any_angle_turns) {
      heading = heading_of(b - a);
      ready += dur_rot(from.heading, heading, opt_.omega_max);
    }
    const SafeInterval& src = sim_.intervals[static_cast<std::size_t>(from.cell)][static_cast<std::size_t>(from.interval)];
    if (ready > src.end) return;
    const auto& targets = sim_.intervals[static_cast<std::size_t>(cell)];
    for (int j = 0; j < static_cast<int>(targets.size()); ++j) {
      const SafeInterval& J = targets[static_cast<std::size_t>(j)];
      if (J.begin > src.end + d) break;
      if (J.end < ready + d) continue;
      const auto dep = earliest_safe_departure(a, b, opt_.v_max, ready, src.end, J, sim_.index);
      if (!dep) continue;
      Node n;
      n.cell = cell;
      n.interval = j;
      n.heading = heading;
      n.departure = *dep;
      n.g = *dep + d;
      n.f = n.g + h(cell);
      n.parent = from_id;
      out.push_back(n);
    }
  }

  // Duplicate handling against states already seen at the same (cell, interval).
  // Costs within kTieEps count as equal, and equal keeps the earlier state.
  void consider(const Node& cand) {
    auto& seen = visited_[static_cast<std::size_t>(sim_.flat_id(cand.cell, cand.interval))];
    bool add = true;
    for (auto it = seen.begin(); it != seen.end();) {
      Node& other = nodes_[static_cast<std::size_t>(*it)];
      const double rot = rotation_between(cand.heading, other.heading);
      if (cand.g >= other.g + rot - kTieEps) {
        add = false;
      } else if (other.g > cand.g + rot + kTieEps && other.open) {
        other.open = false;
        it = seen.erase(it);
        continue;
      }
      ++it;
    }
    if (add) push(cand);
  }

  Plan reconstruct(int goal_id, double delta) const {
    std::vector<int> chain;
    for (int id = goal_id; id >= 0; id = nodes_[static_cast<std::size_t>(id)].parent) chain.push_back(id);
    std::reverse(chain.begin(), chain.end());

    Plan plan;
    plan.mode = mode_;
    plan.delta = delta;
    plan.start = inst_.start;
    Configuration cur = inst_.start;
    double t = 0.0;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const Node& prev = nodes_[static_cast<std::size_t>(chain[i - 1])];
      const Node& n = nodes_[static_cast<std::size_t>(chain[i])];
      t = prev.g;
      if (mode_ == PlannerMode::any_angle_turns) {
        const double rot = dur_rot(cur.heading, n.heading, opt_.omega_max);
        if (rot > 0.0) {
          Configuration turned{cur.pos, n.heading};
          plan.actions.push_back({ActionKind::rotate, cur, turned, t, t + rot});
          cur = turned;
          t += rot;
        }
      }
      if (n.departure > t) {
        plan.actions.push_back({ActionKind::wait, cur, cur, t, n.departure});
      }
      const Configuration next{map_.center(n.cell), cur.heading};
      plan.actions.push_back({ActionKind::translate, cur, next, n.departure, n.g});
      cur = next;
    }
    plan.arrival = nodes_[static_cast<std::size_t>(goal_id)].g;
    return plan;
  }

  static constexpr double kTieEps = 1e-9;

  const Instance& inst_;
  const GridMap& map_;
  const SafeIntervalMap& sim_;
  PlannerMode mode_;
  PlannerOptions opt_;
  SearchStats* stats_;
  int goal_cell_ = 0;
  int goal_interval_ = 0;
  std::size_t local_expansions_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::vector<int>> visited_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueOrder> open_;
};

}  // namespace detail

/// Plans on prebuilt safe intervals (built for the same instance and delta).
inline std::optional<Plan> plan(const Instance& inst, const SafeIntervalMap& intervals, PlannerMode mode,
                                double delta, const PlannerOptions& opt = {}, SearchStats* stats = nullptr) {
  detail::SippSearch search(inst, intervals, mode, opt, stats);
  return search.run(delta);
}

/// Builds safe intervals with clearance 2r + delta and plans. Returns
/// nullopt when the search space is exhausted without reaching the goal.
inline std::optional<Plan> plan(const Instance& inst, PlannerMode mode, double delta,
                                const PlannerOptions& opt = {}, SearchStats* stats = nullptr) {
  const SafeIntervalMap intervals = build_safe_interval_map(inst, delta);
  return plan(inst, intervals, mode, delta, opt, stats);
}

}  // namespace sipptrack
