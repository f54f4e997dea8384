#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "edgeflow/jsonio.hpp"
#include "edgeflow/numfmt.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Logical application spec: sources, processing components and sinks wired
// into a DAG. Component internals are abstracted as resource/selectivity
// profiles; the simulator never executes user code.
// ---------------------------------------------------------------------------

struct SourceDecl {
  std::string id;
  std::string selector;      // free-text device group label
  std::string site_id;       // edge site the sensors attach to
  double rate = 0.0;         // messages/second
  std::uint64_t bytes_per_msg = 1;  // mean raw record size

  bool operator==(const SourceDecl&) const = default;
};

enum class ComponentKind { stream_op, ml_scorer, aggregator };

inline const char* to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::stream_op: return "stream_op";
    case ComponentKind::ml_scorer: return "ml_scorer";
    case ComponentKind::aggregator: return "aggregator";
  }
  return "?";
}

struct ComponentDecl {
  std::string id;
  ComponentKind kind = ComponentKind::stream_op;
  double cpu_units_per_msg = 0.0;  // reference-core seconds per message
  double mem_mb = 0.0;
  double selectivity = 1.0;        // output messages per input message
  std::uint64_t out_bytes_per_msg = 0;
  std::optional<std::string> pinned_site;

  bool operator==(const ComponentDecl&) const = default;
};

enum class SinkKind { storage, pubsub };

inline const char* to_string(SinkKind k) {
  return k == SinkKind::storage ? "storage" : "pubsub";
}

struct SinkDecl {
  std::string id;
  SinkKind kind = SinkKind::storage;
  std::string site_id;  // always a cloud site

  bool operator==(const SinkDecl&) const = default;
};

struct LogicalSpec {
  std::string name;
  std::vector<SourceDecl> sources;
  std::vector<ComponentDecl> components;
  std::vector<SinkDecl> sinks;
  std::vector<std::pair<std::string, std::string>> edges;

  bool operator==(const LogicalSpec&) const = default;

  const ComponentDecl* find_component(const std::string& id) const {
    for (const auto& c : components)
      if (c.id == id) return &c;
    return nullptr;
  }
  const SourceDecl* find_source(const std::string& id) const {
    for (const auto& s : sources)
      if (s.id == id) return &s;
    return nullptr;
  }
  const SinkDecl* find_sink(const std::string& id) const {
    for (const auto& s : sinks)
      if (s.id == id) return &s;
    return nullptr;
  }

  std::vector<std::string> all_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : sources) ids.push_back(s.id);
    for (const auto& c : components) ids.push_back(c.id);
    for (const auto& k : sinks) ids.push_back(k.id);
    return ids;
  }

  std::vector<std::string> in_edges(const std::string& id) const {
    std::vector<std::string> r;
    for (const auto& [u, v] : edges)
      if (v == id) r.push_back(u);
    return r;
  }
  std::vector<std::string> out_edges(const std::string& id) const {
    std::vector<std::string> r;
    for (const auto& [u, v] : edges)
      if (u == id) r.push_back(v);
    return r;
  }
};

// --- Validation -------------------------------------------------------------

struct Finding {
  std::string code;  // CYCLE, DANGLING_EDGE, DUP_ID, UNREACHABLE, BAD_PIN
  std::string message;
  std::vector<std::string> ids;  // entities involved
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
  bool has(const std::string& code) const {
    for (const auto& f : findings)
      if (f.code == code) return true;
    return false;
  }
};

namespace detail {

// Tarjan-free cycle finder: iterative DFS with colors, records one cycle.
inline std::optional<std::vector<std::string>> find_cycle(
    const std::vector<std::string>& nodes,
    const std::map<std::string, std::vector<std::string>>& adj) {
  std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
  std::map<std::string, std::string> parent;
  for (const auto& n : nodes) color[n] = 0;
  for (const auto& start : nodes) {
    if (color[start] != 0) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      auto it = adj.find(node);
      const auto& next = it == adj.end() ? std::vector<std::string>{} : it->second;
      if (idx < next.size()) {
        const std::string& child = next[idx++];
        if (!color.count(child)) continue;  // dangling edge, reported separately
        if (color[child] == 1) {
          // Walk back from node to child to recover the cycle members.
          std::vector<std::string> cycle{child};
          std::string cur = node;
          while (cur != child) {
            cycle.push_back(cur);
            cur = parent[cur];
          }
          std::sort(cycle.begin(), cycle.end());
          return cycle;
        }
        if (color[child] == 0) {
          color[child] = 1;
          parent[child] = node;
          stack.emplace_back(child, 0);
        }
      } else {
        color[node] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline ValidationReport validate(const LogicalSpec& spec) {
  ValidationReport report;
  auto ids = spec.all_ids();

  std::set<std::string> seen, dups;
  for (const auto& id : ids)
    if (!seen.insert(id).second) dups.insert(id);
  for (const auto& d : dups)
    report.findings.push_back({"DUP_ID", "duplicate id '" + d + "'", {d}});

  std::set<std::string> source_ids, sink_ids;
  for (const auto& s : spec.sources) source_ids.insert(s.id);
  for (const auto& k : spec.sinks) sink_ids.insert(k.id);

  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [u, v] : spec.edges) {
    bool known_u = seen.count(u), known_v = seen.count(v);
    if (!known_u || !known_v) {
      report.findings.push_back({"DANGLING_EDGE",
                                 "edge (" + u + ", " + v + ") references an undeclared id",
                                 {u, v}});
      continue;
    }
    if (sink_ids.count(u))
      report.findings.push_back({"DANGLING_EDGE", "sink '" + u + "' has an out-edge", {u}});
    if (source_ids.count(v))
      report.findings.push_back({"DANGLING_EDGE", "source '" + v + "' has an in-edge", {v}});
    adj[u].push_back(v);
  }

  if (auto cycle = detail::find_cycle(ids, adj)) {
    std::string msg = "cycle through [";
    for (std::size_t i = 0; i < cycle->size(); ++i)
      msg += (i ? ", " : "") + (*cycle)[i];
    msg += "]";
    report.findings.push_back({"CYCLE", msg, *cycle});
  }

  // Reachability: every component must sit on some source→sink path.
  auto reach = [&](const std::set<std::string>& begin, bool forward) {
    std::set<std::string> r = begin;
    std::vector<std::string> work(begin.begin(), begin.end());
    while (!work.empty()) {
      std::string n = work.back();
      work.pop_back();
      for (const auto& [u, v] : spec.edges) {
        const std::string& from = forward ? u : v;
        const std::string& to = forward ? v : u;
        if (from == n && seen.count(to) && r.insert(to).second) work.push_back(to);
      }
    }
    return r;
  };
  auto from_sources = reach(source_ids, true);
  auto to_sinks = reach(sink_ids, false);
  for (const auto& c : spec.components) {
    if (!from_sources.count(c.id) || !to_sinks.count(c.id))
      report.findings.push_back(
          {"UNREACHABLE", "component '" + c.id + "' is not on a source-to-sink path", {c.id}});
  }

  return report;
}

// Kahn's algorithm; the ready set is kept sorted so ties always break
// lexicographically and the order is reproducible.
inline std::vector<std::string> topological_order(const LogicalSpec& spec) {
  auto ids = spec.all_ids();
  std::map<std::string, int> indeg;
  for (const auto& id : ids) indeg[id] = 0;
  for (const auto& [u, v] : spec.edges)
    if (indeg.count(v) && indeg.count(u)) ++indeg[v];

  std::set<std::string> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.insert(id);

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (const auto& [u, v] : spec.edges) {
      if (u != n || !indeg.count(v)) continue;
      if (--indeg[v] == 0) ready.insert(v);
    }
  }
  if (order.size() != ids.size())
    throw PreconditionError("spec has a cycle; run validate() first");
  return order;
}

// --- Parsing / serialization ------------------------------------------------

namespace detail {

inline ComponentKind parse_component_kind(const std::string& s, const std::string& path) {
  if (s == "stream_op") return ComponentKind::stream_op;
  if (s == "ml_scorer") return ComponentKind::ml_scorer;
  if (s == "aggregator") return ComponentKind::aggregator;
  throw FieldError(path, "unknown component kind '" + s + "'");
}

inline SinkKind parse_sink_kind(const std::string& s, const std::string& path) {
  if (s == "storage") return SinkKind::storage;
  if (s == "pubsub") return SinkKind::pubsub;
  throw FieldError(path, "unknown sink kind '" + s + "'");
}

}  // namespace detail

inline LogicalSpec parse_spec(const std::string& text) {
  using namespace jsonio;
  Json j = parse_json_text(text);
  expect_object(j, "$");
  reject_unknown_keys(j, {"name", "sources", "components", "sinks", "edges"}, "$");

  LogicalSpec spec;
  spec.name = get_string(j, "name", "$");

  const Json& sources = require(j, "sources", "$");
  expect_array(sources, "$.sources");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    std::string path = "sources[" + std::to_string(i) + "]";
    const Json& s = sources[i];
    expect_object(s, path);
    reject_unknown_keys(s, {"id", "selector", "site_id", "rate", "bytes_per_msg"}, path);
    SourceDecl d;
    d.id = get_string(s, "id", path);
    d.selector = get_string(s, "selector", path);
    d.site_id = get_string(s, "site_id", path);
    d.rate = get_number(s, "rate", path);
    if (d.rate < 0) throw FieldError(path + ".rate", "must be >= 0");
    d.bytes_per_msg = get_uint(s, "bytes_per_msg", path);
    if (d.bytes_per_msg < 1) throw FieldError(path + ".bytes_per_msg", "must be >= 1");
    spec.sources.push_back(std::move(d));
  }

  const Json& comps = require(j, "components", "$");
  expect_array(comps, "$.components");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    std::string path = "components[" + std::to_string(i) + "]";
    const Json& c = comps[i];
    expect_object(c, path);
    reject_unknown_keys(c,
                        {"id", "kind", "cpu_units_per_msg", "mem_mb", "selectivity",
                         "out_bytes_per_msg", "pinned_site"},
                        path);
    ComponentDecl d;
    d.id = get_string(c, "id", path);
    d.kind = detail::parse_component_kind(get_string(c, "kind", path), path + ".kind");
    d.cpu_units_per_msg = get_number(c, "cpu_units_per_msg", path);
    if (d.cpu_units_per_msg < 0) throw FieldError(path + ".cpu_units_per_msg", "must be >= 0");
    d.mem_mb = get_number(c, "mem_mb", path);
    if (d.mem_mb < 0) throw FieldError(path + ".mem_mb", "must be >= 0");
    d.selectivity = get_number(c, "selectivity", path);
    if (d.selectivity < 0) throw FieldError(path + ".selectivity", "must be >= 0");
    d.out_bytes_per_msg = get_uint(c, "out_bytes_per_msg", path);
    if (c.contains("pinned_site")) d.pinned_site = get_string(c, "pinned_site", path);
    spec.components.push_back(std::move(d));
  }

  const Json& sinks = require(j, "sinks", "$");
  expect_array(sinks, "$.sinks");
  for (std::size_t i = 0; i < sinks.size(); ++i) {
    std::string path = "sinks[" + std::to_string(i) + "]";
    const Json& s = sinks[i];
    expect_object(s, path);
    reject_unknown_keys(s, {"id", "kind", "site_id"}, path);
    SinkDecl d;
    d.id = get_string(s, "id", path);
    d.kind = detail::parse_sink_kind(get_string(s, "kind", path), path + ".kind");
    d.site_id = get_string(s, "site_id", path);
    spec.sinks.push_back(std::move(d));
  }

  const Json& edges = require(j, "edges", "$");
  expect_array(edges, "$.edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::string path = "edges[" + std::to_string(i) + "]";
    const Json& e = edges[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      throw FieldError(path, "expected a 2-element array of id strings");
    spec.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }

  return spec;
}

inline std::string serialize_spec(const LogicalSpec& spec) {
  Json j;
  j["name"] = spec.name;
  j["sources"] = Json::array();
  for (const auto& s : spec.sources)
    j["sources"].push_back({{"id", s.id},
                            {"selector", s.selector},
                            {"site_id", s.site_id},
                            {"rate", s.rate},
                            {"bytes_per_msg", s.bytes_per_msg}});
  j["components"] = Json::array();
  for (const auto& c : spec.components) {
    Json jc = {{"id", c.id},
               {"kind", to_string(c.kind)},
               {"cpu_units_per_msg", c.cpu_units_per_msg},
               {"mem_mb", c.mem_mb},
               {"selectivity", c.selectivity},
               {"out_bytes_per_msg", c.out_bytes_per_msg}};
    if (c.pinned_site) jc["pinned_site"] = *c.pinned_site;
    j["components"].push_back(std::move(jc));
  }
  j["sinks"] = Json::array();
  for (const auto& s : spec.sinks)
    j["sinks"].push_back({{"id", s.id}, {"kind", to_string(s.kind)}, {"site_id", s.site_id}});
  j["edges"] = Json::array();
  for (const auto& [u, v] : spec.edges) j["edges"].push_back({u, v});
  return j.dump(2);
}

}  // namespace edgeflow
