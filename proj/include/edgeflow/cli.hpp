#pragma once

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgeflow/scenario.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// CLI entry point. Exit codes: 0 success, 2 input error (bad paths, parse or
// validation failures), 1 internal error. Every artifact is a deterministic
// function of the scenario file contents (plus --seed, which overrides the
// scenario seed).
// ---------------------------------------------------------------------------

namespace clidetail {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline Scenario load(const CommonArgs& args) {
  Scenario sc = load_scenario(args.scenario_path);
  if (args.seed) {
    sc.sim.seed = *args.seed;
    if (sc.workload) sc.workload->seed = *args.seed;
  }
  return sc;
}

inline void say(const CommonArgs& args, const std::string& line) {
  if (!args.quiet) std::cout << line << "\n";
}

inline int run_validate(const CommonArgs& args) {
  Scenario sc = load(args);
  ValidationReport report = validate(sc.spec);
  for (const auto& f : report.findings)
    std::cout << f.code << ": " << f.message << "\n";
  if (!report.ok()) return 2;
  say(args, "spec '" + sc.spec.name + "' is valid");
  return 0;
}

inline int run_compile(const CommonArgs& args) {
  Scenario sc = load(args);
  PhysicalPlan plan = compile(sc.spec, sc.topology, scenario_placement(sc));
  std::string report = plan_report(plan);
  write_file(std::filesystem::path(args.out_dir) / "plan.txt", report);
  say(args, report);
  return 0;
}

inline int run_analyze(const CommonArgs& args) {
  Scenario sc = load(args);
  PhysicalPlan plan = compile(sc.spec, sc.topology, scenario_placement(sc));
  CostBreakdown cost = cost_rate_modeled(plan, steady_rates(sc.spec));
  say(args, cost_breakdown_table(cost));
  std::string csv = cost_breakdown_csv(cost);
  std::cout << csv;
  write_file(std::filesystem::path(args.out_dir) / "cost.csv", csv);
  return 0;
}

inline int simulate_one(const Scenario& sc, const std::filesystem::path& out,
                        const CommonArgs& args) {
  PhysicalPlan plan = compile(sc.spec, sc.topology, scenario_placement(sc));
  auto stream = make_workload_stream(sc);
  SimResult result = run_simulation(plan, *stream, sc.sim);
  write_file(out / "metrics.csv", metrics_to_csv(result.series));
  write_file(out / "plan.txt", plan_report(plan));
  write_file(out / "summary.txt", summarize(plan, result));
  say(args, "wrote " + (out / "metrics.csv").string());
  return 0;
}

inline int run_simulate(const CommonArgs& args, const std::vector<std::string>& sweep) {
  if (sweep.empty()) {
    Scenario sc = load(args);
    return simulate_one(sc, args.out_dir, args);
  }
  // Sweep mode: isolated runs, one output directory per scenario file.
  std::vector<std::future<int>> futures;
  for (const std::string& path : sweep) {
    futures.push_back(std::async(std::launch::async, [&args, path]() {
      CommonArgs one = args;
      one.scenario_path = path;
      Scenario sc = load(one);
      std::filesystem::path out =
          std::filesystem::path(args.out_dir) / std::filesystem::path(path).stem();
      return simulate_one(sc, out, one);
    }));
  }
  int rc = 0;
  for (auto& f : futures) rc = std::max(rc, f.get());
  return rc;
}

inline int run_optimize_placement(const CommonArgs& args) {
  Scenario sc = load(args);
  std::optional<SimulatorAccess> access;
  if (sc.optimizer.use_shadowing) {
    access = SimulatorAccess{[&sc]() { return make_workload_stream(sc); }, sc.sim};
  }
  OptimizeResult result =
      optimize(sc.spec, sc.topology, sc.optimizer, access ? &*access : nullptr);
  std::filesystem::path out(args.out_dir);
  write_file(out / "moves.csv", moves_to_csv(result));
  write_file(out / "final_placement.json", serialize_placement(result.final_placement));
  write_file(out / "figure2.csv", figure2_to_csv(result));
  say(args, "moves: " + std::to_string(result.moves.size()) + ", final cost " +
                format_double(static_cast<double>(result.final_total_micro) / 1e6) + " usd/h");
  return 0;
}

inline int run_replay_comm(const CommonArgs& args) {
  Scenario sc = load(args);
  PhysicalPlan plan = compile(sc.spec, sc.topology, scenario_placement(sc));

  std::vector<const Channel*> uplinks;
  for (const auto& ch : plan.channels)
    if (ch.kind == ChannelKind::uplink) uplinks.push_back(&ch);
  if (uplinks.size() != 1)
    throw ConfigError("replay-comm expects exactly one uplink channel, found " +
                      std::to_string(uplinks.size()));
  const LinkSpec* link = plan.topology.find_link(uplinks[0]->from_site, uplinks[0]->to_site);
  if (link->bandwidth_schedule.steps.size() < 2)
    throw ConfigError("replay-comm needs a bandwidth schedule with at least 2 steps");
  if (sc.sim.control_interval_ms != 1000)
    throw ConfigError("replay-comm reports at 1 s resolution; control_interval_ms must be 1000");

  auto stream = make_workload_stream(sc);
  SimResult result = run_simulation(plan, *stream, sc.sim);
  std::filesystem::path out(args.out_dir);
  write_file(out / "figure3.csv", figure3_to_csv(result.channel_seconds.at(uplinks[0]->id())));
  write_file(out / "metrics.csv", metrics_to_csv(result.series));
  write_file(out / "summary.txt", summarize(plan, result));
  say(args, "wrote " + (out / "figure3.csv").string());
  return 0;
}

}  // namespace clidetail

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"edge-cloud dataflow simulator and optimizer"};
  app.require_subcommand(1);

  clidetail::CommonArgs common;
  std::vector<std::string> sweep;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
    auto* opt = cmd->add_option("--scenario", common.scenario_path, "scenario file");
    if (needs_scenario) opt->required();
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--seed", [&common](const std::vector<std::string>& vals) {
      std::uint64_t v;
      if (!try_parse_u64(vals[0], v)) return false;
      common.seed = v;
      return true;
    }, "override the scenario seed");
    cmd->add_flag("--quiet", common.quiet, "suppress progress output");
  };

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a logical spec");
  add_common(validate_cmd);
  CLI::App* compile_cmd = app.add_subcommand("compile", "compile spec + placement to a plan");
  add_common(compile_cmd);
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "modeled cost breakdown");
  add_common(analyze_cmd);
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run the simulator");
  add_common(simulate_cmd, false);
  simulate_cmd->add_option("--sweep", sweep, "run several scenario files in parallel");
  CLI::App* optimize_cmd =
      app.add_subcommand("optimize-placement", "greedy placement optimization");
  add_common(optimize_cmd);
  CLI::App* replay_cmd =
      app.add_subcommand("replay-comm", "bandwidth adaptation series for one uplink");
  add_common(replay_cmd);

  std::vector<const char*> argv;
  argv.push_back("edgeflow");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (validate_cmd->parsed()) return clidetail::run_validate(common);
    if (compile_cmd->parsed()) return clidetail::run_compile(common);
    if (analyze_cmd->parsed()) return clidetail::run_analyze(common);
    if (simulate_cmd->parsed()) {
      if (sweep.empty() && common.scenario_path.empty())
        throw ConfigError("simulate needs --scenario or --sweep");
      return clidetail::run_simulate(common, sweep);
    }
    if (optimize_cmd->parsed()) return clidetail::run_optimize_placement(common);
    if (replay_cmd->parsed()) return clidetail::run_replay_comm(common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace edgeflow
