#pragma once

// File formats: map text, instance/plan/outcome JSON, reference/trace CSV.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sipptrack/controller.hpp"
#include "sipptrack/grid_world.hpp"
#include "sipptrack/planner.hpp"
#include "sipptrack/refiner.hpp"

namespace sipptrack {

using json = nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline GridMap load_map_file(const std::filesystem::path& path) { return load_map(read_file(path)); }

// ---- instance ---------------------------------------------------------------

inline json instance_to_json(const Instance& inst, const std::string& map_path) {
  json j;
  j["units"] = {{"length", "m"}, {"time", "s"}, {"angle", "rad"}};
  j["map_path"] = map_path;
  j["robot"] = {{"radius", inst.robot.radius}, {"v_max", inst.robot.v_max}, {"omega_max", inst.robot.omega_max}};
  j["start"] = {{"x", inst.start.pos.x}, {"y", inst.start.pos.y}, {"theta", inst.start.heading}};
  j["goal"] = {{"x", inst.goal.x}, {"y", inst.goal.y}};
  json obs = json::array();
  for (const auto& o : inst.obstacles) {
    json wps = json::array();
    for (const auto& w : o.waypoints) wps.push_back({{"x", w.pos.x}, {"y", w.pos.y}, {"t", w.t}});
    obs.push_back({{"radius", o.radius}, {"waypoints", std::move(wps)}});
  }
  j["obstacles"] = std::move(obs);
  return j;
}

/// Builds an instance from JSON; `map` is the already loaded map_path.
inline Instance instance_from_json(const json& j, GridMap map) {
  Instance inst;
  inst.map = std::move(map);
  const auto& robot = j.at("robot");
  inst.robot.radius = robot.value("radius", 0.5 * inst.map.cell_size());
  inst.robot.v_max = robot.value("v_max", 1.0);
  inst.robot.omega_max = robot.value("omega_max", kPi);
  inst.start = {{j.at("start").at("x").get<double>(), j.at("start").at("y").get<double>()},
                normalize_angle(j.at("start").value("theta", 0.0))};
  inst.goal = {j.at("goal").at("x").get<double>(), j.at("goal").at("y").get<double>()};
  for (const auto& o : j.at("obstacles")) {
    DynamicObstacle obs;
    obs.radius = o.value("radius", inst.robot.radius);
    for (const auto& w : o.at("waypoints")) {
      obs.waypoints.push_back({{w.at("x").get<double>(), w.at("y").get<double>()}, w.at("t").get<double>()});
    }
    inst.obstacles.push_back(std::move(obs));
  }
  validate_instance(inst);
  return inst;
}

/// Loads an instance file; a relative map_path is resolved against the
/// instance file's directory.
inline Instance load_instance_file(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  std::filesystem::path map_path = j.at("map_path").get<std::string>();
  if (map_path.is_relative()) map_path = path.parent_path() / map_path;
  return instance_from_json(j, load_map_file(map_path));
}

// ---- plan -------------------------------------------------------------------

inline json configuration_to_json(const Configuration& c) {
  return {{"x", c.pos.x}, {"y", c.pos.y}, {"theta", c.heading}};
}

inline Configuration configuration_from_json(const json& j) {
  return {{j.at("x").get<double>(), j.at("y").get<double>()}, j.at("theta").get<double>()};
}

inline json plan_to_json(const Plan& plan) {
  json j;
  j["mode"] = std::string(to_string(plan.mode));
  j["inflate"] = plan.delta;
  j["arrival"] = plan.arrival;
  j["start"] = configuration_to_json(plan.start);
  json actions = json::array();
  for (const auto& a : plan.actions) {
    actions.push_back({{"kind", std::string(to_string(a.kind))},
                       {"from", configuration_to_json(a.from)},
                       {"to", configuration_to_json(a.to)},
                       {"t_start", a.t_start},
                       {"t_end", a.t_end}});
  }
  j["actions"] = std::move(actions);
  return j;
}

inline Plan plan_from_json(const json& j) {
  Plan plan;
  const auto mode = parse_planner_mode(j.at("mode").get<std::string>());
  if (!mode) throw std::runtime_error("plan: unknown mode");
  plan.mode = *mode;
  plan.delta = j.value("inflate", 0.0);
  plan.arrival = j.at("arrival").get<double>();
  plan.start = configuration_from_json(j.at("start"));
  for (const auto& a : j.at("actions")) {
    const auto kind = parse_action_kind(a.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("plan: unknown action kind");
    plan.actions.push_back({*kind, configuration_from_json(a.at("from")), configuration_from_json(a.at("to")),
                            a.at("t_start").get<double>(), a.at("t_end").get<double>()});
  }
  validate_plan(plan);
  return plan;
}

// ---- CSV exports ------------------------------------------------------------

namespace detail {
inline void append_row(std::string& out, std::initializer_list<double> values) {
  char buf[40];
  bool first = true;
  for (double v : values) {
    if (!first) out.push_back(',');
    first = false;
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out += buf;
  }
  out.push_back('\n');
}
}  // namespace detail

/// Samples the reference at `rate` Hz over [0, t_end] (end point included).
inline std::string reference_to_csv(const ReferenceTrajectory& ref, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  std::string out = "t,x,y,theta,vx,vy,omega\n";
  const auto n = static_cast<long>(std::ceil(ref.t_end * rate - 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = std::min(static_cast<double>(k) / rate, ref.t_end);
    const ReferenceSample s = ref.sample(t);
    detail::append_row(out, {t, s.pos.x, s.pos.y, s.theta, s.vel.x, s.vel.y, s.omega});
  }
  return out;
}

inline std::string trace_to_csv(const std::vector<TraceSample>& trace, std::size_t stride = 1) {
  std::string out = "t,x,y,theta,vx,vy,omega,ux,uy,utheta,min_obstacle_distance\n";
  if (stride == 0) stride = 1;
  for (std::size_t i = 0; i < trace.size(); i += stride) {
    const auto& s = trace[i];
    detail::append_row(out, {s.state.t, s.state.x, s.state.y, s.state.theta, s.state.vx, s.state.vy,
                             s.state.omega, s.u[0], s.u[1], s.u[2], s.min_obstacle_distance});
  }
  return out;
}

inline json outcome_to_json(const SimOutcome& o, const ControlGains& gains, double dt) {
  json j;
  j["success"] = o.success;
  j["arrival"] = o.arrival;
  j["rmse1"] = std::isfinite(o.rmse1) ? json(o.rmse1) : json(nullptr);
  j["rmse2"] = o.rmse2;
  j["max_tracking_error"] = o.max_tracking_error;
  j["samples"] = o.samples;
  j["dt"] = dt;
  j["lambda1"] = gains.lambda1;
  j["lambda2"] = gains.lambda2;
  j["feedforward"] = o.feedforward;
  j["accel_clamp"] = o.accel_clamp ? json(*o.accel_clamp) : json(nullptr);
  auto events = [](const std::vector<CollisionEvent>& list) {
    json arr = json::array();
    for (const auto& e : list) {
      arr.push_back({{"t", e.t},
                     {"obstacle", e.obstacle < 0 ? json("static") : json(e.obstacle)},
                     {"distance", e.distance},
                     {"min_distance", e.min_distance}});
    }
    return arr;
  };
  j["collisions"] = events(o.collisions);
  j["static_contacts"] = events(o.static_contacts);
  return j;
}

}  // namespace sipptrack
