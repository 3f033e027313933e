// Command-line front end: gen, plan, refine, simulate, bench.
//
// Exit status: 0 ok, 1 pipeline failure, 2 usage error, 3 no plan found.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sipptrack/bench.hpp"
#include "sipptrack/controller.hpp"
#include "sipptrack/instance_gen.hpp"
#include "sipptrack/io.hpp"
#include "sipptrack/planner.hpp"
#include "sipptrack/refiner.hpp"

namespace fs = std::filesystem;
using namespace sipptrack;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoPlan = 3;

struct GenArgs {
  std::string map_in;
  std::string out_dir = ".";
  int width = 46;
  int height = 70;
  int obstacles = 128;
  double horizon = 100.0;
};

struct PlanArgs {
  std::string instance;
  std::string out = "plan.json";
  std::string mode = "aat";
  double inflate = 0.0;
  long max_expansions = 0;
};

struct RefineArgs {
  std::string plan;
  std::string out = "reference.csv";
  double amax = 5.0;
  double v_max = 1.0;
  double omega_max = kPi;
  double rate = 100.0;
};

struct SimArgs {
  std::string instance;
  std::string plan;
  std::string trace = "trace.csv";
  std::string outcome = "outcome.json";
  double amax = 5.0;
  double lambda1 = -4.0;
  double lambda2 = -5.0;
  double dt = 1e-3;
  int stride = 1;
  bool feedforward = false;
  double clamp = 0.0;
  bool open_loop_reference = false;
};

struct BenchArgs {
  std::string config;
  std::string out_dir = ".";
  int threads = 1;
  std::optional<int> instances;
};

int run_gen(const GenArgs& a, std::uint64_t seed) {
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  GridMap map = a.map_in.empty() ? make_warehouse_map(a.width, a.height) : load_map_file(a.map_in);
  InstanceOptions opt;
  opt.horizon = a.horizon;
  opt.robot.radius = 0.5 * map.cell_size();
  const Instance inst = generate_instance(map, a.obstacles, seed, opt);
  write_file(dir / "map.txt", map_to_text(map));
  write_file(dir / "instance.json", instance_to_json(inst, "map.txt").dump(2) + "\n");
  std::printf("wrote %s and %s\n", (dir / "map.txt").string().c_str(), (dir / "instance.json").string().c_str());
  return 0;
}

int run_plan(const PlanArgs& a) {
  const Instance inst = load_instance_file(a.instance);
  const auto mode = parse_planner_mode(a.mode);
  PlannerOptions opt;
  opt.v_max = inst.robot.v_max;
  opt.omega_max = inst.robot.omega_max;
  opt.max_expansions = static_cast<std::size_t>(a.max_expansions);
  SearchStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = plan(inst, *mode, a.inflate, opt, &stats);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!p) {
    std::fprintf(stderr, "no plan (%zu expansions, %.3f s)\n", stats.expansions, secs);
    return kExitNoPlan;
  }
  write_file(a.out, plan_to_json(*p).dump(2) + "\n");
  std::printf("arrival %.6f s, %zu actions, %zu expansions\n", p->arrival, p->actions.size(), stats.expansions);
  return 0;
}

int run_refine(const RefineArgs& a) {
  const Plan p = plan_from_json(json::parse(read_file(a.plan)));
  RefineOptions opt;
  opt.a_max = a.amax;
  opt.v_max = a.v_max;
  opt.omega_max = a.omega_max;
  const ReferenceTrajectory ref = refine_plan(p, opt);
  for (const auto& w : ref.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  write_file(a.out, reference_to_csv(ref, a.rate));
  std::printf("reference %.6f s, %zu segments\n", ref.t_end, ref.segments.size());
  return 0;
}

int run_simulate(const SimArgs& a) {
  const Instance inst = load_instance_file(a.instance);
  const Plan p = plan_from_json(json::parse(read_file(a.plan)));
  ControlGains gains{a.lambda1, a.lambda2};
  gains.validate();
  RefineOptions ropt;
  ropt.a_max = a.amax;
  ropt.v_max = inst.robot.v_max;
  ropt.omega_max = inst.robot.omega_max;
  SimOptions sopt;
  sopt.dt = a.dt;
  sopt.feedforward = a.feedforward;
  if (a.clamp > 0.0) sopt.accel_clamp = a.clamp;
  sopt.chain_from_actual = !a.open_loop_reference;
  const SimOutcome out = simulate_plan(p, inst, ropt, gains, sopt);
  write_file(a.trace, trace_to_csv(out.trace, static_cast<std::size_t>(std::max(1, a.stride))));
  write_file(a.outcome, outcome_to_json(out, gains, a.dt).dump(2) + "\n");
  std::printf("%s, rmse1 %.5f m, rmse2 %.5f m, %zu contact(s)\n", out.success ? "success" : "collision", out.rmse1,
              out.rmse2, out.collisions.size());
  return 0;
}

int run_bench(const BenchArgs& a, std::optional<std::uint64_t> seed) {
  const fs::path cfg_path = a.config;
  BenchConfig cfg = bench_config_from_json(json::parse(read_file(cfg_path)));
  if (!cfg.map_path.empty() && fs::path(cfg.map_path).is_relative()) {
    cfg.map_path = (cfg_path.parent_path() / cfg.map_path).string();
  }
  if (seed) cfg.seed = *seed;
  if (a.instances) cfg.n_instances = *a.instances;
  cfg.threads = a.threads;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const BenchResult res = run_benchmark(cfg, [&](int done, int total) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "\r%d/%d instances (%.0f s)", done, total, secs);
    if (done == total) std::fprintf(stderr, "\n");
  });
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  write_file(dir / "bench.csv", emit_report(res.rows, "csv"));
  const std::string table = emit_report(res.rows, "table");
  write_file(dir / "bench.txt", table + "\n" + emit_report(res.rows, "matrix"));
  std::printf("%s", table.c_str());
  std::printf("no-plan instances: %d, generation failures: %d, aborted simulations: %d\n", res.no_plan,
              res.generation_failures, res.aborted);
  return res.aborted > 0 ? kExitFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe-interval planning with trajectory refinement and tracking"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed")->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a map and a random instance");
  gen_cmd->add_option("--map", gen.map_in, "Existing map file (default: generated warehouse)");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();
  gen_cmd->add_option("--width", gen.width, "Warehouse width (cells)")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--height", gen.height, "Warehouse height (cells)")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--obstacles", gen.obstacles, "Dynamic obstacle count")->check(CLI::NonNegativeNumber)->capture_default_str();
  gen_cmd->add_option("--horizon", gen.horizon, "Obstacle schedule length (s)")->check(CLI::PositiveNumber)->capture_default_str();

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "Plan a collision-free path");
  plan_cmd->add_option("--instance", pl.instance, "Instance file")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--out", pl.out, "Plan output file")->capture_default_str();
  plan_cmd->add_option("--mode", pl.mode, "sipp | aa | aat")->check(CLI::IsMember({"sipp", "aa", "aat"}))->capture_default_str();
  plan_cmd->add_option("--inflate", pl.inflate, "Collision interval inflation (m)")->check(CLI::NonNegativeNumber)->capture_default_str();
  plan_cmd->add_option("--max-expansions", pl.max_expansions, "Search budget (0 = unlimited)")->check(CLI::NonNegativeNumber);

  RefineArgs rf;
  auto* refine_cmd = app.add_subcommand("refine", "Refine a plan into a reference trajectory");
  refine_cmd->add_option("--plan", rf.plan, "Plan file")->required()->check(CLI::ExistingFile);
  refine_cmd->add_option("--out", rf.out, "Reference CSV")->capture_default_str();
  refine_cmd->add_option("--amax", rf.amax, "Acceleration bound (m/s^2)")->check(CLI::PositiveNumber)->capture_default_str();
  refine_cmd->add_option("--vmax", rf.v_max, "Speed bound (m/s)")->check(CLI::PositiveNumber)->capture_default_str();
  refine_cmd->add_option("--omega-max", rf.omega_max, "Rotation speed bound (rad/s)")->check(CLI::PositiveNumber);
  refine_cmd->add_option("--rate", rf.rate, "Sample rate (Hz)")->check(CLI::PositiveNumber)->capture_default_str();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Track a plan in closed loop");
  sim_cmd->add_option("--instance", sim.instance, "Instance file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--plan", sim.plan, "Plan file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--trace", sim.trace, "Trace CSV")->capture_default_str();
  sim_cmd->add_option("--outcome", sim.outcome, "Outcome JSON")->capture_default_str();
  sim_cmd->add_option("--amax", sim.amax, "Acceleration bound (m/s^2)")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--lambda1", sim.lambda1, "First closed-loop pole")->capture_default_str();
  sim_cmd->add_option("--lambda2", sim.lambda2, "Second closed-loop pole")->capture_default_str();
  sim_cmd->add_option("--dt", sim.dt, "Integration step (s)")->check(CLI::Range(1e-6, 1e-2))->capture_default_str();
  sim_cmd->add_option("--stride", sim.stride, "Write every n-th trace sample")->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--feedforward", sim.feedforward, "Add reference acceleration to the command");
  sim_cmd->add_option("--clamp", sim.clamp, "Saturate |u| per axis (0 = off)")->check(CLI::NonNegativeNumber);
  sim_cmd->add_flag("--open-loop-reference", sim.open_loop_reference,
                    "Refine the whole plan up front instead of from the actual state");

  BenchArgs bn;
  auto* bench_cmd = app.add_subcommand("bench", "Run a batch evaluation");
  bench_cmd->add_option("--config", bn.config, "Benchmark config (JSON)")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out-dir", bn.out_dir, "Report directory")->capture_default_str();
  bench_cmd->add_option("--threads", bn.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--instances", bn.instances, "Override instance count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen, seed);
    if (plan_cmd->parsed()) return run_plan(pl);
    if (refine_cmd->parsed()) return run_refine(rf);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (bench_cmd->parsed()) {
      return run_bench(bn, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
