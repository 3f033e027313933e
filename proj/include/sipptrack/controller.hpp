#pragma once

// Closed-loop execution of a reference trajectory by the double-integrator
// model x'' = u with the pole-placement feedback
//   u = (l1 + l2) (x' - x*') - l1 l2 (x - x*)
// applied independently to x, y and theta, integrated with fixed-step RK4
// and audited for contacts at every step.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sipptrack/grid_world.hpp"
#include "sipptrack/planner.hpp"
#include "sipptrack/refiner.hpp"

namespace sipptrack {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Characteristic roots of the error dynamics; both must be negative.
struct ControlGains {
  double lambda1 = -4.0;
  double lambda2 = -5.0;

  void validate() const {
    if (!(lambda1 < 0.0) || !(lambda2 < 0.0)) {
      throw std::invalid_argument("control gains must lie in the open left half-plane");
    }
  }
};

/// Feedback command for one coordinate.
inline double control(double value, double rate, double ref_value, double ref_rate, const ControlGains& g) {
  return (g.lambda1 + g.lambda2) * (rate - ref_rate) - g.lambda1 * g.lambda2 * (value - ref_value);
}

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // continuous (not wrapped)
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  double t = 0.0;

  Vec2 pos() const { return {x, y}; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) && std::isfinite(vx) &&
           std::isfinite(vy) && std::isfinite(omega) && std::isfinite(t);
  }
};

struct SimOptions {
  double dt = 1e-3;
  bool feedforward = false;                 // add the reference acceleration to u
  std::optional<double> accel_clamp;        // saturate |u_x|, |u_y| at this value
  double static_tolerance = 0.0;            // wall penetration below this is not reported (m)
  bool static_contacts_fail = false;        // also list wall contacts as collisions
  bool chain_from_actual = true;            // re-plan each segment from the actual state
  bool record_trace = true;
  std::optional<RobotState> initial_state;  // default: reference start, at rest
};

struct TraceSample {
  RobotState state;
  std::array<double, 3> u{};
  std::array<double, 3> ref{};  // x*, y*, theta* tracked at this instant
  double min_obstacle_distance = std::numeric_limits<double>::infinity();
};

struct CollisionEvent {
  double t = 0.0;               // first contact
  int obstacle = -1;            // -1 = static obstacle
  double distance = 0.0;        // at first contact
  double min_distance = 0.0;    // deepest point of the contact(s)
};

struct SimOutcome {
  std::vector<TraceSample> trace;
  std::vector<CollisionEvent> collisions;       // dynamic obstacles; decide success
  std::vector<CollisionEvent> static_contacts;  // wall penetrations, reported only
  bool success = true;
  double rmse1 = std::numeric_limits<double>::quiet_NaN();  // vs planned trajectory
  double rmse2 = 0.0;                                        // vs tracked reference
  double arrival = 0.0;
  double max_tracking_error = 0.0;
  std::size_t samples = 0;
  bool feedforward = false;
  std::optional<double> accel_clamp;
};

namespace detail {

/// Reference source over a fixed, precomputed trajectory.
class FixedReference {
 public:
  explicit FixedReference(const ReferenceTrajectory& ref) : ref_(ref) {}
  ReferenceSample sample(double t) const { return ref_.sample(t); }
  double next_boundary() const { return std::numeric_limits<double>::infinity(); }
  void advance(const RobotState&) {}
  double t_end() const { return ref_.t_end; }

 private:
  const ReferenceTrajectory& ref_;
};

/// Reference rebuilt at every plan segment from the robot's actual state
/// toward the planned segment endpoint.
class ChainedReference {
 public:
  ChainedReference(const Plan& plan, const RefineOptions& opt) : plan_(plan), opt_(opt) {
    for (int i = 0; i < static_cast<int>(plan.actions.size()); ++i) {
      if (plan.actions[static_cast<std::size_t>(i)].duration() > 0.0) actions_.push_back(i);
    }
    next_ = actions_.empty() ? std::numeric_limits<double>::infinity() : 0.0;
    const Configuration& s = plan.start;
    current_.x.push_back(PolynomialPiece::constant(s.pos.x, 0.0, 0.0));
    current_.y.push_back(PolynomialPiece::constant(s.pos.y, 0.0, 0.0));
    current_.theta.push_back(PolynomialPiece::constant(s.heading, 0.0, 0.0));
    t_end_ = 0.0;
  }

  ReferenceSample sample(double t) const {
    auto eval = [t](const std::vector<PolynomialPiece>& pieces, double& v, double& d, double& dd) {
      const PolynomialPiece* p = &pieces.back();
      for (const auto& q : pieces) {
        if (t < q.t_end) {
          p = &q;
          break;
        }
      }
      const double tc = std::clamp(t, p->t_begin, p->t_end);
      v = p->value(tc);
      const bool inside = t >= p->t_begin && t <= p->t_end;
      d = inside ? p->derivative(t) : 0.0;
      dd = inside ? p->second_derivative(t) : 0.0;
    };
    ReferenceSample s;
    eval(current_.x, s.pos.x, s.vel.x, s.acc.x);
    eval(current_.y, s.pos.y, s.vel.y, s.acc.y);
    eval(current_.theta, s.theta, s.omega, s.alpha);
    return s;
  }

  double next_boundary() const { return next_; }
  double t_end() const { return t_end_; }

  // Segments start on the plan clock. A segment stretched by the fallback is
  // cut off when the next planned action begins, so lag never accumulates
  // into a schedule shift.
  void advance(const RobotState& state) {
    const PlanAction& a = plan_.actions[static_cast<std::size_t>(actions_[cursor_])];
    current_ = refine_segment(state.pos(), state.theta, a.to.pos, a.to.heading, next_, a.t_end - next_, opt_);
    if (current_.fallback) ++stretched_;
    ++cursor_;
    if (cursor_ < actions_.size()) {
      next_ = std::max(a.t_end, next_);
      t_end_ = next_;
    } else {
      next_ = std::numeric_limits<double>::infinity();
      t_end_ = current_.t_end;
    }
  }

  int stretched_segments() const { return stretched_; }

 private:
  const Plan& plan_;
  RefineOptions opt_;
  std::vector<int> actions_;
  std::size_t cursor_ = 0;
  int stretched_ = 0;
  double next_ = 0.0;
  double t_end_ = 0.0;
  RefinedSegment current_;
};

/// Monotone-time position lookup along one obstacle schedule.
class ObstacleCursor {
 public:
  explicit ObstacleCursor(const DynamicObstacle& obs) : obs_(&obs) {}
  Vec2 at(double t) {
    const auto& w = obs_->waypoints;
    while (i_ + 1 < w.size() && w[i_ + 1].t <= t) ++i_;
    if (i_ + 1 >= w.size() || t <= w[i_].t) return w[i_].pos;
    const double s = (t - w[i_].t) / (w[i_ + 1].t - w[i_].t);
    return w[i_].pos + (w[i_ + 1].pos - w[i_].pos) * s;
  }

 private:
  const DynamicObstacle* obs_;
  std::size_t i_ = 0;
};

struct Derivative {
  std::array<double, 3> dpos;
  std::array<double, 3> dvel;
};

template <class Source>
class ClosedLoop {
 public:
  ClosedLoop(Source& source, const Instance& inst, const ControlGains& gains, const SimOptions& opt,
             const Plan* plan)
      : src_(source), inst_(inst), gains_(gains), opt_(opt), plan_(plan) {
    for (const auto& o : inst.obstacles) cursors_.emplace_back(o);
    event_.assign(inst.obstacles.size(), -1);
  }

  SimOutcome run(RobotState state) {
    if (!(opt_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    gains_.validate();
    SimOutcome out;
    out.feedforward = opt_.feedforward;
    out.accel_clamp = opt_.accel_clamp;
    double sum1 = 0.0;
    double sum2 = 0.0;
    std::size_t n = 0;

    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * opt_.dt;
      while (src_.next_boundary() <= t) src_.advance(state);
      state.t = t;
      if (!state.finite()) {
        throw SimulationError("non-finite robot state at t=" + std::to_string(t));
      }

      const ReferenceSample r = src_.sample(t);
      const Vec2 p = state.pos();
      sum2 += squared_norm(p - r.pos);
      if (plan_) sum1 += squared_norm(p - plan_->at(t).pos);
      out.max_tracking_error = std::max(out.max_tracking_error, distance(p, r.pos));
      ++n;
      const double min_dist = audit(state, out);
      if (opt_.record_trace) {
        const auto u = command(state, r);
        out.trace.push_back({state, u, {r.pos.x, r.pos.y, r.theta}, min_dist});
      }
      if (t >= src_.t_end() && src_.next_boundary() == std::numeric_limits<double>::infinity()) break;

      const double t_next = static_cast<double>(k + 1) * opt_.dt;
      double tc = t;
      while (src_.next_boundary() < t_next) {
        const double b = src_.next_boundary();
        if (b > tc) {
          state = rk4(state, tc, b - tc);
          tc = b;
        }
        state.t = tc;
        src_.advance(state);
      }
      state = rk4(state, tc, t_next - tc);
    }

    out.samples = n;
    out.rmse2 = std::sqrt(sum2 / static_cast<double>(n));
    if (plan_) out.rmse1 = std::sqrt(sum1 / static_cast<double>(n));
    out.arrival = src_.t_end();
    if (opt_.static_contacts_fail) {
      out.collisions.insert(out.collisions.end(), out.static_contacts.begin(), out.static_contacts.end());
      std::stable_sort(out.collisions.begin(), out.collisions.end(),
                       [](const CollisionEvent& a, const CollisionEvent& b) { return a.t < b.t; });
    }
    out.success = out.collisions.empty();
    return out;
  }

 private:
  std::array<double, 3> command(const RobotState& s, const ReferenceSample& r) const {
    std::array<double, 3> u = {control(s.x, s.vx, r.pos.x, r.vel.x, gains_),
                               control(s.y, s.vy, r.pos.y, r.vel.y, gains_),
                               control(s.theta, s.omega, r.theta, r.omega, gains_)};
    if (opt_.feedforward) {
      u[0] += r.acc.x;
      u[1] += r.acc.y;
      u[2] += r.alpha;
    }
    if (opt_.accel_clamp) {
      const double c = *opt_.accel_clamp;
      u[0] = std::clamp(u[0], -c, c);
      u[1] = std::clamp(u[1], -c, c);
    }
    return u;
  }

  Derivative derivative(const RobotState& s, double t) const {
    const auto u = command(s, src_.sample(t));
    return {{s.vx, s.vy, s.omega}, u};
  }

  RobotState rk4(const RobotState& s, double t, double h) const {
    if (!(h > 0.0)) return s;
    auto shifted = [](const RobotState& base, const Derivative& d, double f) {
      RobotState r = base;
      r.x += f * d.dpos[0];
      r.y += f * d.dpos[1];
      r.theta += f * d.dpos[2];
      r.vx += f * d.dvel[0];
      r.vy += f * d.dvel[1];
      r.omega += f * d.dvel[2];
      return r;
    };
    const Derivative k1 = derivative(s, t);
    const Derivative k2 = derivative(shifted(s, k1, 0.5 * h), t + 0.5 * h);
    const Derivative k3 = derivative(shifted(s, k2, 0.5 * h), t + 0.5 * h);
    const Derivative k4 = derivative(shifted(s, k3, h), t + h);
    RobotState r = s;
    const double w = h / 6.0;
    r.x += w * (k1.dpos[0] + 2.0 * k2.dpos[0] + 2.0 * k3.dpos[0] + k4.dpos[0]);
    r.y += w * (k1.dpos[1] + 2.0 * k2.dpos[1] + 2.0 * k3.dpos[1] + k4.dpos[1]);
    r.theta += w * (k1.dpos[2] + 2.0 * k2.dpos[2] + 2.0 * k3.dpos[2] + k4.dpos[2]);
    r.vx += w * (k1.dvel[0] + 2.0 * k2.dvel[0] + 2.0 * k3.dvel[0] + k4.dvel[0]);
    r.vy += w * (k1.dvel[1] + 2.0 * k2.dvel[1] + 2.0 * k3.dvel[1] + k4.dvel[1]);
    r.omega += w * (k1.dvel[2] + 2.0 * k2.dvel[2] + 2.0 * k3.dvel[2] + k4.dvel[2]);
    r.t = t + h;
    return r;
  }

  // Contact audit at one sample; returns the smallest center distance to a
  // dynamic obstacle.
  double audit(const RobotState& s, SimOutcome& out) {
    const Vec2 p = s.pos();
    const double r = inst_.robot.radius;
    const double t = s.t;

    const double wall = static_clearance(p, r, inst_.map);
    if (wall < r - opt_.static_tolerance) {
      if (static_event_ < 0) {
        static_event_ = static_cast<int>(out.static_contacts.size());
        out.static_contacts.push_back({t, -1, wall, wall});
      }
      auto& e = out.static_contacts[static_cast<std::size_t>(static_event_)];
      e.min_distance = std::min(e.min_distance, wall);
    }

    // Candidate obstacles are refreshed every cull period with a margin that
    // covers the largest relative displacement inside one period.
    if (t >= next_cull_) {
      candidates_.clear();
      for (std::size_t i = 0; i < cursors_.size(); ++i) {
        const double reach = r + inst_.obstacles[i].radius + kCullMargin;
        if (distance(cursors_[i].at(t), p) < reach) candidates_.push_back(i);
      }
      next_cull_ = t + kCullPeriod;
    }
    double best = std::numeric_limits<double>::infinity();
    auto check = [&](std::size_t i) {
      const double d = distance(cursors_[i].at(t), p);
      best = std::min(best, d);
      if (d < r + inst_.obstacles[i].radius) {
        if (event_[i] < 0) {
          event_[i] = static_cast<int>(out.collisions.size());
          out.collisions.push_back({t, static_cast<int>(i), d, d});
        }
        auto& e = out.collisions[static_cast<std::size_t>(event_[i])];
        e.min_distance = std::min(e.min_distance, d);
      }
    };
    if (opt_.record_trace) {
      for (std::size_t i = 0; i < cursors_.size(); ++i) check(i);
    } else {
      for (std::size_t i : candidates_) check(i);
    }
    return best;
  }

  static constexpr double kCullPeriod = 0.1;
  static constexpr double kCullMargin = 1.5;  // > (v_robot + v_obstacle) * period with wide headroom

  Source& src_;
  const Instance& inst_;
  ControlGains gains_;
  SimOptions opt_;
  const Plan* plan_;
  std::vector<ObstacleCursor> cursors_;
  std::vector<int> event_;
  std::vector<std::size_t> candidates_;
  double next_cull_ = 0.0;
  int static_event_ = -1;
};

}  // namespace detail

/// Tracks a fixed reference. RMSE1 is filled only when `plan` is given.
inline SimOutcome simulate(const ReferenceTrajectory& reference, const Instance& inst, const ControlGains& gains,
                           const SimOptions& opt = {}, const Plan* plan = nullptr) {
  detail::FixedReference src(reference);
  RobotState init;
  if (opt.initial_state) {
    init = *opt.initial_state;
  } else {
    const ReferenceSample r0 = reference.sample(0.0);
    init.x = r0.pos.x;
    init.y = r0.pos.y;
    init.theta = r0.theta;
  }
  detail::ClosedLoop<detail::FixedReference> loop(src, inst, gains, opt, plan);
  return loop.run(init);
}

/// Executes a plan: refines it (segment by segment from the actual state when
/// `opt.chain_from_actual`, otherwise once up front) and tracks the result.
inline SimOutcome simulate_plan(const Plan& plan, const Instance& inst, const RefineOptions& refine,
                                const ControlGains& gains, const SimOptions& opt = {}) {
  RobotState init;
  if (opt.initial_state) {
    init = *opt.initial_state;
  } else {
    init.x = plan.start.pos.x;
    init.y = plan.start.pos.y;
    init.theta = plan.start.heading;
  }
  if (opt.chain_from_actual) {
    detail::ChainedReference src(plan, refine);
    detail::ClosedLoop<detail::ChainedReference> loop(src, inst, gains, opt, &plan);
    return loop.run(init);
  }
  const ReferenceTrajectory ref = refine_plan(plan, refine);
  SimOptions o = opt;
  o.initial_state = init;
  return simulate(ref, inst, gains, o, &plan);
}

/// RMSE of the executed positions against the plan (first) and against a
/// reference (second), over the trace samples.
inline std::pair<double, double> rmse_metrics(const std::vector<TraceSample>& trace, const Plan& plan,
                                              const ReferenceTrajectory& reference) {
  if (trace.empty()) return {0.0, 0.0};
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& smp : trace) {
    const Vec2 p = smp.state.pos();
    s1 += squared_norm(p - plan.at(smp.state.t).pos);
    s2 += squared_norm(p - reference.sample(smp.state.t).pos);
  }
  const double n = static_cast<double>(trace.size());
  return {std::sqrt(s1 / n), std::sqrt(s2 / n)};
}

/// Same metrics using the reference recorded in each sample.
inline std::pair<double, double> rmse_metrics(const std::vector<TraceSample>& trace, const Plan& plan) {
  if (trace.empty()) return {0.0, 0.0};
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& smp : trace) {
    const Vec2 p = smp.state.pos();
    s1 += squared_norm(p - plan.at(smp.state.t).pos);
    s2 += squared_norm(p - Vec2{smp.ref[0], smp.ref[1]});
  }
  const double n = static_cast<double>(trace.size());
  return {std::sqrt(s1 / n), std::sqrt(s2 / n)};
}

}  // namespace sipptrack
