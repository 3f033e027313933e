#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sipptrack/refiner.hpp"
#include "support.hpp"

using namespace sipptrack;

namespace {

struct PieceEval {
  const std::vector<PolynomialPiece>* pieces;
  const PolynomialPiece& at(double t) const {
    for (const auto& p : *pieces) {
      if (t <= p.t_end) return p;
    }
    return pieces->back();
  }
  double value(double t) const { return at(t).value(t); }
  double rate(double t) const { return at(t).derivative(t); }
  double accel(double t) const { return at(t).second_derivative(t); }
};

/// Random segment: displacement up to 3 m, duration from just-feasible up
/// to twice that, acceleration 1..20.
struct Segment {
  double x0, xf, t0, tf, a;
};

Segment random_segment(std::mt19937_64& rng, bool feasible) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Segment s{};
  s.x0 = -5.0 + 10.0 * u(rng);
  s.xf = s.x0 + (u(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 3.0 * u(rng));
  s.a = 1.0 + 19.0 * u(rng);
  s.t0 = 20.0 * u(rng);
  const double t_min = 2.0 * std::sqrt(std::abs(s.xf - s.x0) / s.a);  // Eq. 7 boundary
  s.tf = s.t0 + (feasible ? t_min * (1.0 + u(rng)) : t_min * (0.3 + 0.69 * u(rng)));
  return s;
}

}  // namespace

TEST(AxisAccel, Examples) {
  auto b = axis_accel_bound(5.0, 0.0);
  EXPECT_NEAR(b.x, 5.0, 1e-12);
  EXPECT_NEAR(b.y, 0.0, 1e-12);
  b = axis_accel_bound(5.0, kPi / 4);
  EXPECT_NEAR(b.x, 3.5355339, 1e-6);
  EXPECT_NEAR(b.y, 3.5355339, 1e-6);
  b = axis_accel_bound(5.0, kPi);
  EXPECT_NEAR(b.x, 5.0, 1e-12);
  EXPECT_NEAR(b.y, 0.0, 1e-12);
}

TEST(CruiseVelocity, Examples) {
  auto v = cruise_velocity(0.0, 2.0, 0.0, 3.0, 2.0);
  EXPECT_NEAR(v.discriminant, 20.0, 1e-12);
  EXPECT_NEAR(v.v, (6.0 - std::sqrt(20.0)) / 2.0, 1e-12);
  EXPECT_NEAR(v.v * (3.0 - v.v / 2.0), 2.0, 1e-12);
  v = cruise_velocity(2.0, 0.0, 0.0, 3.0, 2.0);
  EXPECT_NEAR(v.v, -0.7639320225, 1e-9);
  v = cruise_velocity(0.0, 1.0, 0.0, 1.0, 5.0);
  EXPECT_NEAR(v.discriminant, 5.0, 1e-12);
  EXPECT_NEAR(v.v, 1.3819660113, 1e-9);
  EXPECT_FALSE(v.fallback);
}

TEST(CruiseVelocity, FallbackWhenTooShort) {
  const auto v = cruise_velocity(0.0, 1.0, 0.0, 0.5, 5.0, 1.0);
  EXPECT_TRUE(v.fallback);
  EXPECT_DOUBLE_EQ(v.v, 1.0);
}

TEST(RefineTranslation, DegenerateIsConstant) {
  const auto p = refine_translation(1.5, 1.5, 0.0, 2.0, 5.0);
  const PieceEval e{&p.pieces};
  for (double t = 0.0; t <= 2.0; t += 0.1) {
    EXPECT_DOUBLE_EQ(e.value(t), 1.5);
    EXPECT_DOUBLE_EQ(e.rate(t), 0.0);
  }
}

TEST(RefineTranslation, BoundaryConditionsAndBounds) {
  const auto p = refine_translation(0.0, 2.0, 0.0, 3.0, 2.0);
  const PieceEval e{&p.pieces};
  EXPECT_NEAR(e.value(0.0), 0.0, 1e-9);
  EXPECT_NEAR(e.value(3.0), 2.0, 1e-9);
  EXPECT_NEAR(e.rate(0.0), 0.0, 1e-9);
  EXPECT_NEAR(e.rate(3.0), 0.0, 1e-9);
  for (double t = 0.0; t <= 3.0; t += 1e-3) EXPECT_LE(std::abs(e.accel(t)), 2.0 + 1e-9);
  // Derivatives against finite differences of the value.
  for (double t = 0.05; t < 2.95; t += 0.0137) {
    const double fd = oracle::derivative([&](double s) { return e.value(s); }, t);
    EXPECT_NEAR(e.rate(t), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(RefineTranslation, ContinuousAtPhaseBoundaries) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    const Segment s = random_segment(rng, true);
    const auto p = refine_translation(s.x0, s.xf, s.t0, s.tf, s.a);
    for (std::size_t i = 0; i + 1 < p.pieces.size(); ++i) {
      const double tb = p.pieces[i].t_end;
      EXPECT_NEAR(p.pieces[i].value(tb), p.pieces[i + 1].value(tb), 1e-9);
      EXPECT_NEAR(p.pieces[i].derivative(tb), p.pieces[i + 1].derivative(tb), 1e-9);
    }
  }
}

TEST(RefineTranslation, RandomSegmentsObeyBounds) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 1000; ++k) {
    const Segment s = random_segment(rng, true);
    const auto p = refine_translation(s.x0, s.xf, s.t0, s.tf, s.a);
    ASSERT_FALSE(p.fallback);
    const PieceEval e{&p.pieces};
    ASSERT_NEAR(e.value(s.t0), s.x0, 1e-9);
    ASSERT_NEAR(e.value(s.tf), s.xf, 1e-9);
    ASSERT_NEAR(e.rate(s.t0), 0.0, 1e-9);
    ASSERT_NEAR(e.rate(s.tf), 0.0, 1e-9);
    const auto cv = cruise_velocity(s.x0, s.xf, s.t0, s.tf, s.a);
    ASSERT_NEAR(std::abs(cv.v) * ((s.tf - s.t0) - std::abs(cv.v) / s.a), std::abs(s.xf - s.x0), 1e-9);
    for (double t = s.t0; t <= s.tf; t += 1e-3) {
      ASSERT_LE(std::abs(e.accel(t)), s.a + 1e-9);
      ASSERT_LE(std::abs(e.rate(t)), std::abs(cv.v) + 1e-9);
    }
  }
}

TEST(RefineTranslation, FallbackStretchesButStaysBounded) {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 200; ++k) {
    const Segment s = random_segment(rng, false);
    const double vcap = 1.0;
    const auto p = refine_translation(s.x0, s.xf, s.t0, s.tf, s.a, vcap);
    ASSERT_TRUE(p.fallback);
    ASSERT_GT(p.t_end, s.tf);
    const PieceEval e{&p.pieces};
    EXPECT_NEAR(e.value(p.t_end), s.xf, 1e-9);
    EXPECT_NEAR(e.rate(p.t_end), 0.0, 1e-9);
    for (double t = s.t0; t <= p.t_end; t += 1e-3) {
      ASSERT_LE(std::abs(e.accel(t)), s.a + 1e-9);
      ASSERT_LE(std::abs(e.rate(t)), vcap + 1e-9);
    }
  }
}

TEST(RefineRotation, QuarterTurn) {
  const auto p = refine_rotation(0.0, kPi / 2, 0.0, 0.5);
  EXPECT_NEAR(p.value(0.25), kPi / 4, 1e-12);
  EXPECT_NEAR(p.derivative(0.25), 3.0 * kPi / 2.0, 1e-12);
  const auto c = oracle::cubic_by_solve(0.0, 0.0, 0.0, 0.5, kPi / 2, 0.0);
  for (double t = 0.0; t <= 0.5; t += 0.01) {
    EXPECT_NEAR(p.value(t), c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t, 1e-9);
  }
}

TEST(RefineRotation, ConstantAndShortBranch) {
  const auto c = refine_rotation(1.0, 1.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(c.value(0.5), 1.0);
  const auto w = refine_rotation(0.1, 2 * kPi - 0.1, 0.0, 1.0);
  EXPECT_NEAR(w.value(1.0), -0.1, 1e-12);
}

TEST(RefineRotation, RandomRestToRest) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = 2 * kPi * u(rng);
    const double b = 2 * kPi * u(rng);
    const double t0 = 10 * u(rng);
    const double tf = t0 + 0.1 + 2 * u(rng);
    const auto p = refine_rotation(a, b, t0, tf);
    EXPECT_LT(std::abs(p.derivative(t0)), 1e-12);
    EXPECT_LT(std::abs(p.derivative(tf)), 1e-12);
    EXPECT_NEAR(normalize_angle(p.value(tf)), normalize_angle(b), 1e-9);
    const double target = a + shortest_angle_delta(a, b);
    const auto c = oracle::cubic_by_solve(t0, a, 0.0, tf, target, 0.0);
    const double tm = 0.5 * (t0 + tf);
    EXPECT_NEAR(p.value(tm), c[0] + c[1] * tm + c[2] * tm * tm + c[3] * tm * tm * tm, 1e-7);
  }
}

TEST(RefinePlan, SingleWaitIsConstant) {
  Plan plan;
  plan.start = {{1.5, 2.5}, 0.7};
  plan.actions.push_back({ActionKind::wait, plan.start, plan.start, 0.0, 3.0});
  plan.arrival = 3.0;
  const auto ref = refine_plan(plan, {});
  for (double t = 0.0; t <= 3.0; t += 0.1) {
    const auto s = ref.sample(t);
    EXPECT_DOUBLE_EQ(s.pos.x, 1.5);
    EXPECT_DOUBLE_EQ(s.pos.y, 2.5);
    EXPECT_DOUBLE_EQ(s.theta, 0.7);
  }
}

TEST(RefinePlan, DiagonalStaysOnSegment) {
  const Instance inst = testing_support::make_instance(6, 4, {{0.5, 0.5}, 0.0}, {5.5, 3.5});
  const auto p = plan(inst, PlannerMode::any_angle_turns, 0.0);
  ASSERT_TRUE(p);
  for (double a_max : {5.0, 8.0, 15.0}) {
    const auto ref = refine_plan(*p, {a_max, 1.0, kPi});
    for (const auto& seg : ref.segments) EXPECT_FALSE(seg.fallback);
    const Vec2 a = inst.start.pos;
    const Vec2 b = inst.goal;
    for (double t = 0.0; t <= ref.t_end; t += 1e-3) {
      EXPECT_LT(point_segment_distance(ref.sample(t).pos, a, b), 1e-9);
    }
    const auto end = ref.sample(ref.t_end);
    EXPECT_NEAR(end.pos.x, b.x, 1e-9);
    EXPECT_NEAR(end.pos.y, b.y, 1e-9);
    EXPECT_NEAR(ref.t_end, p->arrival, 1e-9);
  }
}

TEST(RefinePlan, SegmentBoundariesMatchPlan) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance inst = testing_support::random_small_instance(seed);
    const auto p = plan(inst, PlannerMode::any_angle_turns, 0.1);
    if (!p) continue;
    const auto ref = refine_plan(*p, {5.0, 1.0, kPi});
    for (const auto& seg : ref.segments) {
      if (seg.fallback) continue;
      const auto& act = p->actions[static_cast<std::size_t>(seg.action)];
      const auto s0 = ref.sample(seg.t_start);
      const auto s1 = ref.sample(seg.t_end);
      EXPECT_NEAR(s0.pos.x, act.from.pos.x, 1e-9);
      EXPECT_NEAR(s0.pos.y, act.from.pos.y, 1e-9);
      EXPECT_NEAR(s1.pos.x, act.to.pos.x, 1e-9);
      EXPECT_NEAR(s1.pos.y, act.to.pos.y, 1e-9);
      EXPECT_NEAR(s0.vel.x, 0.0, 1e-9);
      EXPECT_NEAR(s1.vel.y, 0.0, 1e-9);
      EXPECT_NEAR(s0.omega, 0.0, 1e-9);
      EXPECT_NEAR(s1.omega, 0.0, 1e-9);
    }
  }
}

TEST(RefinePlan, ShortSegmentTriggersStretchWarning) {
  Plan plan;
  plan.start = {{0.5, 0.5}, 0.0};
  plan.actions.push_back({ActionKind::translate, plan.start, {{1.5, 0.5}, 0.0}, 0.0, 1.0});
  plan.actions.push_back({ActionKind::wait, {{1.5, 0.5}, 0.0}, {{1.5, 0.5}, 0.0}, 1.0, 2.0});
  plan.arrival = 2.0;
  const auto ref = refine_plan(plan, {3.0, 1.0, kPi});
  EXPECT_FALSE(ref.warnings.empty());
  ASSERT_FALSE(ref.segments.empty());
  EXPECT_TRUE(ref.segments.front().fallback);
  EXPECT_GT(ref.t_end, 2.0);
  EXPECT_NEAR(ref.sample(ref.t_end).pos.x, 1.5, 1e-9);
}
