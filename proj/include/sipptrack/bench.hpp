#pragma once

// Batch evaluation: random instances on a warehouse-like map, planned once
// per inflation value, executed once per acceleration bound, aggregated
// into (a_max, delta) rows.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sipptrack/controller.hpp"
#include "sipptrack/instance_gen.hpp"
#include "sipptrack/io.hpp"
#include "sipptrack/planner.hpp"
#include "sipptrack/refiner.hpp"
#include "sipptrack/safe_intervals.hpp"

namespace sipptrack {

/// Vertical double-sided racks separated by aisles, broken by horizontal
/// cross corridors, with a free border corridor.
struct WarehouseOptions {
  int margin = 2;
  int rack_width = 2;
  int aisle_width = 3;
  int rack_length = 10;
  int cross_width = 3;
};

inline GridMap make_warehouse_map(int width, int height, const WarehouseOptions& opt = {},
                                  double cell_size = 1.0) {
  GridMap map = GridMap::empty(width, height, cell_size);
  const int x_period = opt.rack_width + opt.aisle_width;
  const int y_period = opt.rack_length + opt.cross_width;
  for (int x = opt.margin; x + opt.rack_width <= width - opt.margin; x += x_period) {
    for (int y = opt.margin; y < height - opt.margin; y += y_period) {
      const int y_end = std::min(y + opt.rack_length, height - opt.margin);
      for (int yy = y; yy < y_end; ++yy) {
        for (int xx = x; xx < x + opt.rack_width; ++xx) map.set_blocked(xx, yy, true);
      }
    }
  }
  return map;
}

struct BenchConfig {
  std::string map_path;  // empty: generated warehouse map
  int map_width = 46;
  int map_height = 70;
  WarehouseOptions warehouse;
  int n_instances = 100;
  int n_obstacles = 128;
  std::vector<double> a_max = {5.0, 8.0, 15.0};
  std::vector<double> deltas = {0.0, 0.05, 0.1, 0.2, 0.5};
  ControlGains gains;
  double v_max = 1.0;
  double omega_max = kPi;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  PlannerMode mode = PlannerMode::any_angle_turns;
  InstanceOptions instance;
  double static_tolerance = 0.0;
  bool static_contacts_fail = false;
  bool chain_from_actual = true;
  bool feedforward = false;
  std::optional<double> accel_clamp;
  int threads = 1;

  void validate() const {
    if (n_instances <= 0) throw std::invalid_argument("bench: n_instances must be positive");
    if (n_obstacles < 0) throw std::invalid_argument("bench: n_obstacles must be non-negative");
    if (a_max.empty() || deltas.empty()) throw std::invalid_argument("bench: a_max and delta lists must be non-empty");
    for (double a : a_max) {
      if (!(a > 0.0)) throw std::invalid_argument("bench: a_max values must be positive");
    }
    for (double d : deltas) {
      if (!(d >= 0.0)) throw std::invalid_argument("bench: delta values must be non-negative");
    }
    gains.validate();
    if (!(dt > 0.0 && dt <= 0.01)) throw std::invalid_argument("bench: dt must lie in (0, 0.01]");
  }
};

inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
  BenchConfig c;
  c.map_path = j.value("map_path", std::string());
  c.map_width = j.value("map_width", c.map_width);
  c.map_height = j.value("map_height", c.map_height);
  if (j.contains("warehouse")) {
    const auto& w = j.at("warehouse");
    c.warehouse.margin = w.value("margin", c.warehouse.margin);
    c.warehouse.rack_width = w.value("rack_width", c.warehouse.rack_width);
    c.warehouse.aisle_width = w.value("aisle_width", c.warehouse.aisle_width);
    c.warehouse.rack_length = w.value("rack_length", c.warehouse.rack_length);
    c.warehouse.cross_width = w.value("cross_width", c.warehouse.cross_width);
  }
  c.n_instances = j.value("n_instances", c.n_instances);
  c.n_obstacles = j.value("n_obstacles", c.n_obstacles);
  if (j.contains("a_max")) c.a_max = j.at("a_max").get<std::vector<double>>();
  if (j.contains("delta")) c.deltas = j.at("delta").get<std::vector<double>>();
  c.gains.lambda1 = j.value("lambda1", c.gains.lambda1);
  c.gains.lambda2 = j.value("lambda2", c.gains.lambda2);
  c.v_max = j.value("v_max", c.v_max);
  c.omega_max = j.value("omega_max", c.omega_max);
  c.seed = j.value("seed", c.seed);
  c.dt = j.value("dt", c.dt);
  if (j.contains("mode")) {
    const auto m = parse_planner_mode(j.at("mode").get<std::string>());
    if (!m) throw std::invalid_argument("bench: unknown planner mode");
    c.mode = *m;
  }
  c.instance.horizon = j.value("obstacle_horizon", c.instance.horizon);
  c.static_tolerance = j.value("static_tolerance", c.static_tolerance);
  c.static_contacts_fail = j.value("static_contacts_fail", c.static_contacts_fail);
  c.chain_from_actual = j.value("chain_from_actual", c.chain_from_actual);
  c.feedforward = j.value("feedforward", c.feedforward);
  if (j.contains("accel_clamp") && !j.at("accel_clamp").is_null()) c.accel_clamp = j.at("accel_clamp").get<double>();
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

struct BenchRow {
  double a_max = 0.0;
  double delta = 0.0;
  double success_rate = 0.0;     // fraction in [0, 1]
  double rmse1 = 0.0;            // mean over runs, m
  double rmse2 = 0.0;
  double normalized_cost = 1.0;  // mean plan arrival / uninflated arrival
  double static_contact_rate = 0.0;  // runs with a wall penetration
  int runs = 0;
  int no_plan = 0;               // instances excluded because some delta failed
};

/// Per-instance record, kept for inspection and for invariant tests.
struct InstanceRecord {
  std::uint64_t seed = 0;
  bool generated = false;
  bool planned = false;                  // every delta (and delta = 0) produced a plan
  double base_arrival = 0.0;             // delta = 0
  std::vector<double> arrivals;          // per delta
  std::vector<std::vector<bool>> success;   // [a][delta]
  std::vector<std::vector<double>> rmse1;   // [a][delta]
  std::vector<std::vector<double>> rmse2;   // [a][delta]
  std::vector<std::vector<bool>> static_contact;  // [a][delta]
  bool aborted = false;
  std::string error;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<InstanceRecord> instances;
  int no_plan = 0;
  int generation_failures = 0;
  int aborted = 0;
};

/// Deterministic per-instance seed derived from the batch seed (splitmix64).
inline std::uint64_t instance_seed(std::uint64_t seed, int index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline InstanceRecord evaluate_instance(const BenchConfig& cfg, const GridMap& map, int index) {
  InstanceRecord rec;
  rec.seed = instance_seed(cfg.seed, index);
  InstanceOptions iopt = cfg.instance;
  iopt.robot.v_max = cfg.v_max;
  iopt.robot.omega_max = cfg.omega_max;
  iopt.robot.radius = 0.5 * map.cell_size();
  Instance inst;
  try {
    inst = generate_instance(map, cfg.n_obstacles, rec.seed, iopt);
  } catch (const GenerationError& e) {
    rec.error = e.what();
    return rec;
  }
  rec.generated = true;

  PlannerOptions popt;
  popt.v_max = cfg.v_max;
  popt.omega_max = cfg.omega_max;
  std::vector<std::optional<Plan>> plans;
  const auto base = plan(inst, cfg.mode, 0.0, popt);
  for (double d : cfg.deltas) plans.push_back(d == 0.0 ? base : plan(inst, cfg.mode, d, popt));
  if (!base || std::any_of(plans.begin(), plans.end(), [](const auto& p) { return !p.has_value(); })) return rec;
  rec.planned = true;
  rec.base_arrival = base->arrival;
  for (const auto& p : plans) rec.arrivals.push_back(p->arrival);

  SimOptions sopt;
  sopt.dt = cfg.dt;
  sopt.record_trace = false;
  sopt.static_tolerance = cfg.static_tolerance;
  sopt.static_contacts_fail = cfg.static_contacts_fail;
  sopt.chain_from_actual = cfg.chain_from_actual;
  sopt.feedforward = cfg.feedforward;
  sopt.accel_clamp = cfg.accel_clamp;
  for (double a : cfg.a_max) {
    RefineOptions ropt;
    ropt.a_max = a;
    ropt.v_max = cfg.v_max;
    ropt.omega_max = cfg.omega_max;
    std::vector<bool> ok;
    std::vector<double> r1;
    std::vector<double> r2;
    std::vector<bool> wall;
    for (const auto& p : plans) {
      try {
        const SimOutcome out = simulate_plan(*p, inst, ropt, cfg.gains, sopt);
        ok.push_back(out.success);
        r1.push_back(out.rmse1);
        r2.push_back(out.rmse2);
        wall.push_back(!out.static_contacts.empty());
      } catch (const SimulationError& e) {
        rec.aborted = true;
        rec.error = e.what();
        ok.push_back(false);
        r1.push_back(std::nan(""));
        r2.push_back(std::nan(""));
        wall.push_back(false);
      }
    }
    rec.success.push_back(std::move(ok));
    rec.rmse1.push_back(std::move(r1));
    rec.rmse2.push_back(std::move(r2));
    rec.static_contact.push_back(std::move(wall));
  }
  return rec;
}

/// Runs the batch. `progress`, when set, is called after each instance with
/// (finished, total); calls are serialized.
inline BenchResult run_benchmark(const BenchConfig& cfg,
                                 const std::function<void(int, int)>& progress = {}) {
  cfg.validate();
  const GridMap map = cfg.map_path.empty()
                          ? make_warehouse_map(cfg.map_width, cfg.map_height, cfg.warehouse)
                          : load_map_file(cfg.map_path);
  BenchResult result;
  result.instances.resize(static_cast<std::size_t>(cfg.n_instances));

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (int i = next++; i < cfg.n_instances; i = next++) {
      result.instances[static_cast<std::size_t>(i)] = evaluate_instance(cfg, map, i);
      const int finished = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, cfg.n_instances);
      }
    }
  };
  const int n_threads = std::max(1, cfg.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Ordered reduction.
  for (const auto& rec : result.instances) {
    if (!rec.generated) ++result.generation_failures;
    else if (!rec.planned) ++result.no_plan;
    if (rec.aborted) ++result.aborted;
  }
  for (std::size_t ai = 0; ai < cfg.a_max.size(); ++ai) {
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
      BenchRow row;
      row.a_max = cfg.a_max[ai];
      row.delta = cfg.deltas[di];
      row.no_plan = result.no_plan;
      double succ = 0.0;
      double s1 = 0.0;
      double s2 = 0.0;
      double cost = 0.0;
      double wall = 0.0;
      for (const auto& rec : result.instances) {
        if (!rec.planned) continue;
        ++row.runs;
        succ += rec.success[ai][di] ? 1.0 : 0.0;
        s1 += rec.rmse1[ai][di];
        s2 += rec.rmse2[ai][di];
        cost += rec.arrivals[di] / rec.base_arrival;
        wall += rec.static_contact[ai][di] ? 1.0 : 0.0;
      }
      if (row.runs > 0) {
        row.success_rate = succ / row.runs;
        row.rmse1 = s1 / row.runs;
        row.rmse2 = s2 / row.runs;
        row.normalized_cost = cost / row.runs;
        row.static_contact_rate = wall / row.runs;
      }
      result.rows.push_back(row);
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return a.a_max < b.a_max || (a.a_max == b.a_max && a.delta < b.delta);
  });
  return result;
}

/// Renders rows as "csv", "table" (aligned text, one line per row) or
/// "matrix" (a_max down, delta across, "success% / cost%" per cell).
inline std::string emit_report(std::vector<BenchRow> rows, const std::string& format) {
  if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return a.a_max < b.a_max || (a.a_max == b.a_max && a.delta < b.delta);
  });
  char buf[256];
  std::string out;
  if (format == "csv") {
    out = "a_max,delta,success_rate,rmse1,rmse2,normalized_cost,static_contact_rate,runs,no_plan\n";
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%g,%g,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d\n", r.a_max, r.delta, r.success_rate,
                    r.rmse1, r.rmse2, r.normalized_cost, r.static_contact_rate, r.runs, r.no_plan);
      out += buf;
    }
    return out;
  }
  if (format == "table") {
    std::snprintf(buf, sizeof(buf), "%8s %8s %9s %9s %9s %9s %9s %6s %8s\n", "a_max", "delta", "success", "rmse1",
                  "rmse2", "cost", "wall", "runs", "no_plan");
    out = buf;
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%8g %8g %8.1f%% %9.5f %9.5f %8.2f%% %8.1f%% %6d %8d\n", r.a_max, r.delta,
                    100.0 * r.success_rate, r.rmse1, r.rmse2, 100.0 * r.normalized_cost,
                    100.0 * r.static_contact_rate, r.runs, r.no_plan);
      out += buf;
    }
    return out;
  }
  if (format == "matrix") {
    std::vector<double> as;
    std::vector<double> ds;
    for (const auto& r : rows) {
      if (std::find(as.begin(), as.end(), r.a_max) == as.end()) as.push_back(r.a_max);
      if (std::find(ds.begin(), ds.end(), r.delta) == ds.end()) ds.push_back(r.delta);
    }
    std::sort(ds.begin(), ds.end());
    std::snprintf(buf, sizeof(buf), "%8s", "a_max");
    out = buf;
    for (double d : ds) {
      std::snprintf(buf, sizeof(buf), " | %-18s", ("inflate=" + std::to_string(d).substr(0, 4)).c_str());
      out += buf;
    }
    out += "\n";
    for (double a : as) {
      std::snprintf(buf, sizeof(buf), "%8g", a);
      out += buf;
      for (double d : ds) {
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const BenchRow& r) { return r.a_max == a && r.delta == d; });
        if (it == rows.end()) {
          std::snprintf(buf, sizeof(buf), " | %-18s", "-");
        } else {
          std::snprintf(buf, sizeof(buf), " | %5.1f%% / %7.2f%%  ", 100.0 * it->success_rate,
                        100.0 * it->normalized_cost);
        }
        out += buf;
      }
      out += "\n";
    }
    return out;
  }
  throw std::invalid_argument("emit_report: unknown format '" + format + "'");
}

}  // namespace sipptrack
