#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edgeflow/analysis.hpp"
#include "edgeflow/placement_opt.hpp"
#include "edgeflow/simulator.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Scenario files bundle the inputs of one run: spec, topology, workload
// (synthetic or trace), simulation and optimizer configuration. All paths
// resolve relative to the scenario file.
// ---------------------------------------------------------------------------

struct Scenario {
  std::filesystem::path base_dir;
  LogicalSpec spec;
  Topology topology;
  std::optional<Placement> placement;
  std::optional<WorkloadSpec> workload;       // synthetic
  std::optional<std::filesystem::path> trace; // replayed
  SimConfig sim;
  OptimizerConfig optimizer;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

namespace scenariodetail {

inline SensorModel parse_sensor_model(const Json& j, const std::string& path) {
  using namespace jsonio;
  expect_object(j, path);
  SensorModel m;
  std::string kind = get_string(j, "kind", path);
  if (kind == "constant") {
    reject_unknown_keys(j, {"kind", "level"}, path);
    m.kind = SensorKind::constant;
    m.level = get_number(j, "level", path);
  } else if (kind == "sine_noise") {
    reject_unknown_keys(j, {"kind", "amplitude", "period_s", "noise_sd"}, path);
    m.kind = SensorKind::sine_noise;
    m.amplitude = get_number(j, "amplitude", path);
    m.period_s = get_number(j, "period_s", path);
    if (m.period_s <= 0) throw FieldError(path + ".period_s", "must be > 0");
    m.noise_sd = get_number(j, "noise_sd", path);
    if (m.noise_sd < 0) throw FieldError(path + ".noise_sd", "must be >= 0");
  } else if (kind == "random_walk") {
    reject_unknown_keys(j, {"kind", "step_sd", "start"}, path);
    m.kind = SensorKind::random_walk;
    m.step_sd = get_number(j, "step_sd", path);
    if (m.step_sd < 0) throw FieldError(path + ".step_sd", "must be >= 0");
    m.start = get_number(j, "start", path);
  } else {
    throw FieldError(path + ".kind", "unknown sensor model '" + kind + "'");
  }
  return m;
}

}  // namespace scenariodetail

inline Scenario load_scenario(const std::filesystem::path& scenario_path) {
  using namespace jsonio;
  Scenario sc;
  sc.base_dir = scenario_path.parent_path();
  Json j = parse_json_text(read_file(scenario_path));
  expect_object(j, "$");
  reject_unknown_keys(j, {"spec", "topology", "placement", "workload", "sim", "optimizer"}, "$");

  auto resolve = [&](const std::string& rel) { return sc.base_dir / rel; };

  sc.spec = parse_spec(read_file(resolve(get_string(j, "spec", "$"))));
  sc.topology = parse_topology(read_file(resolve(get_string(j, "topology", "$"))));
  if (j.contains("placement"))
    sc.placement = parse_placement(read_file(resolve(get_string(j, "placement", "$"))));

  if (j.contains("sim")) {
    const Json& s = j["sim"];
    expect_object(s, "$.sim");
    reject_unknown_keys(s,
                        {"tick_ms", "control_interval_ms", "duration_s", "seed",
                         "metrics_window_s", "cpu_true_overrides"},
                        "$.sim");
    if (s.contains("tick_ms"))
      sc.sim.tick_ms = static_cast<std::int64_t>(get_uint(s, "tick_ms", "$.sim"));
    if (s.contains("control_interval_ms"))
      sc.sim.control_interval_ms =
          static_cast<std::int64_t>(get_uint(s, "control_interval_ms", "$.sim"));
    if (s.contains("duration_s")) sc.sim.duration_s = get_number(s, "duration_s", "$.sim");
    if (s.contains("seed")) sc.sim.seed = get_uint(s, "seed", "$.sim");
    if (s.contains("metrics_window_s"))
      sc.sim.metrics_window_s = get_number(s, "metrics_window_s", "$.sim");
    if (s.contains("cpu_true_overrides")) {
      const Json& ov = s["cpu_true_overrides"];
      expect_object(ov, "$.sim.cpu_true_overrides");
      for (auto it = ov.begin(); it != ov.end(); ++it) {
        if (!it.value().is_number())
          throw FieldError("$.sim.cpu_true_overrides." + it.key(), "expected a number");
        sc.sim.cpu_true_overrides[it.key()] = it.value().get<double>();
      }
    }
  }

  if (j.contains("workload")) {
    const Json& w = j["workload"];
    expect_object(w, "$.workload");
    reject_unknown_keys(w, {"generate", "trace"}, "$.workload");
    if (w.contains("trace")) {
      sc.trace = resolve(get_string(w, "trace", "$.workload"));
    } else if (w.contains("generate")) {
      const Json& g = w["generate"];
      expect_object(g, "$.workload.generate");
      reject_unknown_keys(g, {"sources", "duration_s", "seed"}, "$.workload.generate");
      WorkloadSpec ws;
      ws.duration_s = g.contains("duration_s")
                          ? get_number(g, "duration_s", "$.workload.generate")
                          : sc.sim.duration_s;
      ws.seed = g.contains("seed") ? get_uint(g, "seed", "$.workload.generate") : sc.sim.seed;
      const Json& sources = require(g, "sources", "$.workload.generate");
      expect_array(sources, "$.workload.generate.sources");
      for (std::size_t i = 0; i < sources.size(); ++i) {
        std::string path = "$.workload.generate.sources[" + std::to_string(i) + "]";
        const Json& s = sources[i];
        expect_object(s, path);
        reject_unknown_keys(
            s, {"source_id", "sensors", "rate_per_sensor", "sensor_id_prefix", "model"}, path);
        SourceWorkload sw;
        sw.source_id = get_string(s, "source_id", path);
        sw.sensor_count = get_uint(s, "sensors", path);
        if (sw.sensor_count < 1) throw FieldError(path + ".sensors", "must be >= 1");
        sw.rate_per_sensor = get_number(s, "rate_per_sensor", path);
        if (sw.rate_per_sensor <= 0) throw FieldError(path + ".rate_per_sensor", "must be > 0");
        if (s.contains("sensor_id_prefix"))
          sw.sensor_id_prefix = get_string(s, "sensor_id_prefix", path);
        sw.model = scenariodetail::parse_sensor_model(require(s, "model", path), path + ".model");
        ws.sources.push_back(std::move(sw));
      }
      sc.workload = std::move(ws);
    } else {
      throw FieldError("$.workload", "needs either 'generate' or 'trace'");
    }
  }

  if (j.contains("optimizer")) {
    const Json& o = j["optimizer"];
    expect_object(o, "$.optimizer");
    reject_unknown_keys(o,
                        {"max_iterations", "min_saving_usd_per_hour", "candidate_sites",
                         "use_shadowing", "shadow_duration_s"},
                        "$.optimizer");
    if (o.contains("max_iterations")) {
      const Json& v = o["max_iterations"];
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
        throw FieldError("$.optimizer.max_iterations", "must be an integer >= 1");
      sc.optimizer.max_iterations = static_cast<int>(v.get<std::int64_t>());
    }
    if (o.contains("min_saving_usd_per_hour"))
      sc.optimizer.min_saving_usd_per_hour =
          get_number(o, "min_saving_usd_per_hour", "$.optimizer");
    if (o.contains("candidate_sites")) {
      const Json& cs = o["candidate_sites"];
      expect_array(cs, "$.optimizer.candidate_sites");
      for (const auto& v : cs) {
        if (!v.is_string())
          throw FieldError("$.optimizer.candidate_sites", "expected site id strings");
        sc.optimizer.candidate_sites.push_back(v.get<std::string>());
      }
    }
    if (o.contains("use_shadowing"))
      sc.optimizer.use_shadowing = get_bool(o, "use_shadowing", "$.optimizer");
    if (o.contains("shadow_duration_s"))
      sc.optimizer.shadow_duration_s = get_number(o, "shadow_duration_s", "$.optimizer");
  }

  return sc;
}

inline std::unique_ptr<RecordStream> make_workload_stream(const Scenario& sc) {
  if (sc.trace) return std::make_unique<VectorStream>(replay(read_file(*sc.trace)));
  if (sc.workload) return std::make_unique<WorkloadStream>(*sc.workload);
  return std::make_unique<VectorStream>(std::vector<SourcedRecord>{});
}

inline Placement scenario_placement(const Scenario& sc) {
  return sc.placement ? *sc.placement : initial_placement(sc.spec, sc.topology);
}

// Deterministic run summary, derived from the same totals the metrics CSV
// reports.
inline std::string summarize(const PhysicalPlan& plan, const SimResult& result) {
  const MetricsWindow& t = result.series.totals;
  double injected = 0, delivered = 0;
  for (const auto& s : plan.spec.sources) {
    auto it = t.components.find(s.id);
    if (it != t.components.end()) injected += it->second.msgs_out;
  }
  std::string out;
  out += "duration_s=" + format_double(t.end_s) + "\n";
  out += "windows=" + format_u64(result.series.windows.size()) + "\n";
  out += "fully_drained=" + std::string(result.fully_drained ? "true" : "false") + "\n";
  out += "injected_msgs=" + format_double(injected) + "\n";
  for (const auto& s : plan.spec.sinks) {
    auto it = t.components.find(s.id);
    double got = it != t.components.end() ? it->second.msgs_in : 0;
    delivered += got;
    out += "sink_msgs." + s.id + "=" + format_double(got) + "\n";
  }
  out += "delivered_msgs=" + format_double(delivered) + "\n";
  return out;
}

}  // namespace edgeflow
