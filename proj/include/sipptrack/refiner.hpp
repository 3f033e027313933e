#pragma once

// Turns a timed plan into an acceleration-bounded reference trajectory.
//
// Translations are refined per axis into accelerate / cruise / decelerate
// pieces that start and end at rest and reach the planned endpoint at the
// planned time. Rotations use the rest-to-rest cubic. Waits are constants.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sipptrack/geometry.hpp"
#include "sipptrack/planner.hpp"
#include "sipptrack/polynomial.hpp"

namespace sipptrack {

struct AxisAccel {
  double x = 0.0;
  double y = 0.0;
};

/// Per-axis acceleration bounds for a segment heading `segment_angle`.
/// Uses |cos| and |sin| so both are non-negative for any direction.
inline AxisAccel axis_accel_bound(double a_max, double segment_angle) {
  return {a_max * std::abs(std::cos(segment_angle)), a_max * std::abs(std::sin(segment_angle))};
}

struct CruiseVelocity {
  double v = 0.0;             // signed by the direction of motion
  double discriminant = 0.0;  // (tf-t0)^2 a^2 - 4 |xf-x0| a
  bool fallback = false;      // discriminant < 0, v set to the axis speed cap
};

/// Cruise speed of the three-phase profile covering xf - x0 in tf - t0 with
/// ramps at acceleration `a`: v (T - v/a) = |xf - x0|, smaller root.
inline CruiseVelocity cruise_velocity(double x0, double xf, double t0, double tf, double a,
                                      double v_max_axis = std::numeric_limits<double>::infinity()) {
  const double T = tf - t0;
  const double dist = std::abs(xf - x0);
  const double sign = xf >= x0 ? 1.0 : -1.0;
  CruiseVelocity out;
  out.discriminant = T * T * a * a - 4.0 * dist * a;
  if (out.discriminant >= 0.0) {
    out.v = sign * 0.5 * (T * a - std::sqrt(out.discriminant));
  } else {
    out.v = sign * v_max_axis;
    out.fallback = true;
  }
  return out;
}

/// One axis of one segment.
struct AxisProfile {
  std::vector<PolynomialPiece> pieces;
  double t_end = 0.0;       // may exceed the requested end after a fallback
  double cruise = 0.0;      // signed cruise velocity
  double ramp_time = 0.0;   // t_r
  bool fallback = false;    // requested duration was too short for the bound
  bool triangular = false;  // fallback could not reach the speed cap
};

namespace detail {

/// Duration needed to cover `dist` from rest to rest with ramps at `a` and
/// cruise capped at `v_cap`.
inline double minimum_duration(double dist, double a, double v_cap) {
  if (std::isfinite(v_cap) && v_cap > 0.0 && v_cap * v_cap <= a * dist) return dist / v_cap + v_cap / a;
  return 2.0 * std::sqrt(dist / a);
}

inline std::vector<PolynomialPiece> three_phase(double x0, double xf, double t0, double T, double a) {
  const double dist = std::abs(xf - x0);
  const double sign = xf >= x0 ? 1.0 : -1.0;
  const double D = std::max(0.0, T * T * a * a - 4.0 * dist * a);
  const double vmag = 0.5 * (T * a - std::sqrt(D));
  const double v = sign * vmag;
  const double tr = vmag / a;
  const double tf = t0 + T;

  std::vector<PolynomialPiece> out;
  // Acceleration: x_r(t0) = x0, x_r'(t0) = 0, x_r'(t0 + tr) = v.
  const PolynomialPiece accel{{x0, 0.0, 0.5 * sign * a, 0.0}, t0, t0 + tr};
  const double x_at_tr = accel.value(t0 + tr);
  if (tr > 0.0) out.push_back(accel);
  // Cruise: x_s(t) = v (t - t0 - tr) + x_r(t0 + tr).
  const PolynomialPiece cruise{{x_at_tr, v, 0.0, 0.0}, t0 + tr, tf - tr};
  if (tf - tr > t0 + tr) out.push_back(cruise);
  // Deceleration: cubic through (x_s(tf - tr), v) and (xf, 0).
  const double x_dec = cruise.value(tf - tr);
  if (tr > 0.0) out.push_back(PolynomialPiece::hermite(x_dec, v, xf, 0.0, tf - tr, tf));
  if (out.empty()) out.push_back(PolynomialPiece::constant(xf, t0, tf));
  return out;
}

}  // namespace detail

/// Three-phase rest-to-rest profile from x0 at t0 to xf at tf (or later when
/// the acceleration bound makes tf unreachable; see AxisProfile::t_end).
inline AxisProfile refine_translation(double x0, double xf, double t0, double tf, double a,
                                      double v_max_axis = std::numeric_limits<double>::infinity()) {
  if (!(tf > t0)) throw std::invalid_argument("refine_translation: empty time window");
  AxisProfile out;
  out.t_end = tf;
  if (xf == x0) {
    out.pieces.push_back(PolynomialPiece::constant(x0, t0, tf));
    return out;
  }
  if (!(a > 0.0)) throw std::invalid_argument("refine_translation: acceleration bound must be positive");
  const CruiseVelocity cv = cruise_velocity(x0, xf, t0, tf, a, v_max_axis);
  double T = tf - t0;
  if (cv.fallback) {
    out.fallback = true;
    const double dist = std::abs(xf - x0);
    out.triangular = !(std::isfinite(v_max_axis) && v_max_axis > 0.0 && v_max_axis * v_max_axis <= a * dist);
    T = std::max(T, detail::minimum_duration(dist, a, v_max_axis));
    out.t_end = t0 + T;
  }
  out.pieces = detail::three_phase(x0, xf, t0, T, a);
  const double D = std::max(0.0, T * T * a * a - 4.0 * std::abs(xf - x0) * a);
  out.ramp_time = 0.5 * (T * a - std::sqrt(D)) / a;
  out.cruise = (xf >= x0 ? 1.0 : -1.0) * out.ramp_time * a;
  return out;
}

/// Rest-to-rest cubic from theta0 to theta_f (taken on the shorter branch).
inline PolynomialPiece refine_rotation(double theta0, double theta_f, double t0, double tf) {
  if (!(tf > t0)) throw std::invalid_argument("refine_rotation: empty time window");
  const double target = theta0 + shortest_angle_delta(theta0, theta_f);
  if (target == theta0) return PolynomialPiece::constant(theta0, t0, tf);
  return PolynomialPiece::hermite(theta0, 0.0, target, 0.0, t0, tf);
}

struct RefineOptions {
  double a_max = 5.0;      // m/s^2
  double v_max = 1.0;      // m/s, used only by the fallback branch
  double omega_max = kPi;  // rad/s, checked a posteriori
};

/// One refined plan segment (all three coordinates).
struct RefinedSegment {
  std::vector<PolynomialPiece> x, y, theta;
  double t_start = 0.0;
  double t_end = 0.0;
  bool fallback = false;
  bool triangular = false;
  double peak_rate = 0.0;  // |theta'| maximum of the heading cubic
};

/// Refines the move (p0, theta0) -> (pf, theta_f) over [t0, t0 + duration].
/// `theta0` is taken as a continuous (unwrapped) angle; the heading target is
/// placed on its shorter branch.
inline RefinedSegment refine_segment(Vec2 p0, double theta0, Vec2 pf, double theta_f, double t0, double duration,
                                     const RefineOptions& opt) {
  RefinedSegment seg;
  seg.t_start = t0;
  const Vec2 disp = pf - p0;
  const double angle = std::atan2(disp.y, disp.x);
  const AxisAccel acc = axis_accel_bound(opt.a_max, angle);
  const double vx_cap = opt.v_max * std::abs(std::cos(angle));
  const double vy_cap = opt.v_max * std::abs(std::sin(angle));

  double T = duration;
  auto required = [&](double from, double to, double a, double cap) {
    if (from == to) return duration;
    return refine_translation(from, to, t0, t0 + duration, a, cap).t_end - t0;
  };
  T = std::max({T, required(p0.x, pf.x, acc.x, vx_cap), required(p0.y, pf.y, acc.y, vy_cap)});
  const double t1 = t0 + T;

  const AxisProfile px = refine_translation(p0.x, pf.x, t0, t1, acc.x, vx_cap);
  const AxisProfile py = refine_translation(p0.y, pf.y, t0, t1, acc.y, vy_cap);
  seg.x = px.pieces;
  seg.y = py.pieces;
  seg.fallback = T > duration;
  seg.triangular = px.triangular || py.triangular;

  const double target = theta0 + shortest_angle_delta(theta0, theta_f);
  if (target == theta0) {
    seg.theta.push_back(PolynomialPiece::constant(theta0, t0, t1));
  } else {
    seg.theta.push_back(PolynomialPiece::hermite(theta0, 0.0, target, 0.0, t0, t1));
    seg.peak_rate = 1.5 * std::abs(target - theta0) / T;
  }
  seg.t_end = t1;
  return seg;
}

struct ReferenceSample {
  Vec2 pos;
  double theta = 0.0;
  Vec2 vel;
  double omega = 0.0;
  Vec2 acc;
  double alpha = 0.0;
};

/// x*(t), y*(t), theta*(t) covering [0, t_end]; theta is unwrapped.
struct ReferenceTrajectory {
  struct Segment {
    int action = -1;
    ActionKind kind = ActionKind::wait;
    double t_start = 0.0;       // refined (possibly shifted) times
    double t_end = 0.0;
    double plan_t_start = 0.0;  // times in the plan
    double plan_t_end = 0.0;
    bool fallback = false;
  };

  PiecewisePolynomial x, y, theta;
  std::vector<Segment> segments;
  std::vector<std::string> warnings;
  double t_end = 0.0;

  ReferenceSample sample(double t) const {
    return {{x.value(t), y.value(t)},
            theta.value(t),
            {x.derivative(t), y.derivative(t)},
            theta.derivative(t),
            {x.second_derivative(t), y.second_derivative(t)},
            theta.second_derivative(t)};
  }

  void append(const RefinedSegment& seg) {
    for (const auto& p : seg.x) x.append(p);
    for (const auto& p : seg.y) y.append(p);
    for (const auto& p : seg.theta) theta.append(p);
    t_end = seg.t_end;
  }

  static ReferenceTrajectory constant(const Configuration& c, double t_end) {
    ReferenceTrajectory ref;
    ref.x.append(PolynomialPiece::constant(c.pos.x, 0.0, t_end));
    ref.y.append(PolynomialPiece::constant(c.pos.y, 0.0, t_end));
    ref.theta.append(PolynomialPiece::constant(c.heading, 0.0, t_end));
    ref.t_end = t_end;
    return ref;
  }
};

/// Refines every action of `plan`. A segment whose duration is too short for
/// the acceleration bound is stretched; later segments shift by the overrun
/// and a warning is attached.
inline ReferenceTrajectory refine_plan(const Plan& plan, const RefineOptions& opt) {
  if (!(opt.a_max > 0.0)) throw std::invalid_argument("refine_plan: a_max must be positive");
  ReferenceTrajectory ref;
  double t = 0.0;
  double theta = plan.start.heading;
  int fast_rotations = 0;
  double overrun = 0.0;
  for (int i = 0; i < static_cast<int>(plan.actions.size()); ++i) {
    const PlanAction& a = plan.actions[static_cast<std::size_t>(i)];
    const double T = a.duration();
    if (!(T > 0.0)) continue;
    const RefinedSegment seg = refine_segment(a.from.pos, theta, a.to.pos, a.to.heading, t, T, opt);
    ref.append(seg);
    ref.segments.push_back({i, a.kind, seg.t_start, seg.t_end, a.t_start, a.t_end, seg.fallback});
    if (seg.fallback) {
      overrun += (seg.t_end - seg.t_start) - T;
      ref.warnings.push_back("action " + std::to_string(i) + ": duration too short for a_max, stretched by " +
                             std::to_string((seg.t_end - seg.t_start) - T) + " s" +
                             (seg.triangular ? " (triangular profile)" : ""));
    }
    if (seg.peak_rate > opt.omega_max * (1.0 + 1e-12)) ++fast_rotations;
    theta = seg.theta.back().value(seg.t_end);
    t = seg.t_end;
  }
  if (ref.x.empty()) {
    ref = ReferenceTrajectory::constant(plan.start, 0.0);
  }
  ref.t_end = t;
  if (fast_rotations > 0) {
    ref.warnings.push_back(std::to_string(fast_rotations) + " rotation(s) peak above omega_max (cubic peak rate is 1.5x the mean)");
  }
  if (overrun > 0.0) ref.warnings.push_back("total overrun " + std::to_string(overrun) + " s");
  return ref;
}

}  // namespace sipptrack
