#pragma once

// Shared fixtures: random instance generators and a plan wrapper that
// audits every plan it hands back.

#include <atomic>
#include <cstdint>
#include <optional>
#include <random>

#include "oracles.hpp"
#include "sipptrack/instance_gen.hpp"
#include "sipptrack/planner.hpp"

namespace testing_support {

using namespace sipptrack;

/// Global tally of audited plans and violations across a test binary.
struct AuditTally {
  std::atomic<std::size_t> plans{0};
  std::atomic<std::size_t> violations{0};
};

inline AuditTally& tally() {
  static AuditTally t;
  return t;
}

inline constexpr double kAuditTol = 1e-9;

/// True when the plan keeps r from walls and 2r + delta from every obstacle
/// at every 1 ms sample; also counts the result in the global tally.
inline bool audit(const Plan& plan, const Instance& inst, double delta) {
  const auto a = oracle::audit_plan(plan, inst, delta);
  const bool ok = a.min_dynamic_margin >= -kAuditTol && a.min_static_clearance >= inst.robot.radius - kAuditTol;
  ++tally().plans;
  if (!ok) ++tally().violations;
  return ok;
}

/// plan() followed by the audit; a failing audit is reported through
/// `audited` so callers can assert on it.
inline std::optional<Plan> audited_plan(const Instance& inst, PlannerMode mode, double delta, bool* audited,
                                        const PlannerOptions& opt = {}, SearchStats* stats = nullptr) {
  auto p = plan(inst, mode, delta, opt, stats);
  if (audited) *audited = !p || audit(*p, inst, delta);
  return p;
}

/// Map with each interior cell blocked with probability `density`; the
/// cells listed in `keep` stay free.
inline GridMap random_map(int w, int h, double density, std::mt19937_64& rng) {
  GridMap map = GridMap::empty(w, h);
  std::bernoulli_distribution block(density);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) map.set_blocked(x, y, block(rng));
  }
  return map;
}

/// Random small instance on an 8x8 map with up to `max_obstacles` walkers.
/// Walkers may pass the goal; the search must reason about that.
inline Instance random_small_instance(std::uint64_t seed, int max_obstacles = 3) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0;; ++attempt) {
    const GridMap map = random_map(8, 8, 0.15, rng);
    if (map.free_cell_count() < 12) continue;
    InstanceOptions opt;
    opt.horizon = 15.0;
    opt.goal_keepout = 0.0;
    opt.start_keepout = 1.5;
    opt.min_start_goal_fraction = 0.3;
    opt.max_hop = 1;
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_obstacles)) + 1;
    try {
      return generate_instance(map, n, rng(), opt);
    } catch (const GenerationError&) {
      if (attempt > 100) throw;
    }
  }
}

/// Obstacle-free instance on a w x h map with random walls.
inline Instance random_static_instance(std::uint64_t seed, int w = 16, int h = 16, double density = 0.2) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0;; ++attempt) {
    const GridMap map = random_map(w, h, density, rng);
    if (map.free_cell_count() < 2) continue;
    InstanceOptions opt;
    opt.min_start_goal_fraction = 0.3;
    try {
      return generate_instance(map, 0, rng(), opt);
    } catch (const GenerationError&) {
      if (attempt > 100) throw;
    }
  }
}

/// Instance with explicit obstacles on an empty map (validated).
inline Instance make_instance(int w, int h, Configuration start, Vec2 goal,
                              std::vector<DynamicObstacle> obstacles = {}) {
  Instance inst;
  inst.map = GridMap::empty(w, h);
  inst.start = start;
  inst.goal = goal;
  inst.obstacles = std::move(obstacles);
  validate_instance(inst);
  return inst;
}

}  // namespace testing_support
