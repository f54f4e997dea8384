#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeflow/codecs.hpp"
#include "edgeflow/spec_model.hpp"
#include "edgeflow/topology.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Compiles a logical spec plus a placement into a physical plan. Every DAG
// edge whose endpoints land on different sites becomes an uplink channel
// with an encoder injected at the sending site and a decoder at the
// receiving site. Plans are immutable values; moves recompile.
// ---------------------------------------------------------------------------

struct Placement {
  std::map<std::string, std::string> component_sites;  // component id -> site id

  bool operator==(const Placement&) const = default;
};

enum class ChannelKind { local, uplink };

enum class CodecRole { encoder, decoder };

struct CodecComponent {
  std::string id;  // "enc:u->v" / "dec:u->v"
  std::string site_id;
  double cpu_units_per_msg = 0.0;  // static modeling constant (json default)
  CodecRole role = CodecRole::encoder;

  bool operator==(const CodecComponent&) const = default;
};

struct Channel {
  std::pair<std::string, std::string> edge;
  ChannelKind kind = ChannelKind::local;
  std::string from_site;
  std::string to_site;
  // Uplink channels also carry the star link they ride and their codec pair;
  // the simulator instantiates one communication controller per uplink.
  std::string link_edge_site;  // edge-side endpoint of the link ("" for local)
  std::string encoder_id;
  std::string decoder_id;

  bool operator==(const Channel&) const = default;

  std::string id() const { return edge.first + "->" + edge.second; }
};

struct ShadowSpec {
  std::string component;
  std::string site_id;

  bool operator==(const ShadowSpec&) const = default;
};

struct PhysicalPlan {
  LogicalSpec spec;
  Topology topology;
  Placement placement;
  std::vector<Channel> channels;
  std::vector<CodecComponent> injected;
  std::vector<ShadowSpec> shadows;

  bool operator==(const PhysicalPlan&) const = default;

  // Site of any node id (source, component or sink).
  const std::string& site_of(const std::string& id) const {
    if (const SourceDecl* s = spec.find_source(id)) return s->site_id;
    if (const SinkDecl* k = spec.find_sink(id)) return k->site_id;
    auto it = placement.component_sites.find(id);
    if (it == placement.component_sites.end())
      throw PlacementError("no placement for '" + id + "'");
    return it->second;
  }

  double static_mem_at(const std::string& site_id) const {
    double mem = 0.0;
    for (const auto& c : spec.components)
      if (placement.component_sites.at(c.id) == site_id) mem += c.mem_mb;
    for (const auto& sh : shadows)
      if (sh.site_id == site_id) mem += spec.find_component(sh.component)->mem_mb;
    return mem;
  }

  const Channel* find_channel(const std::string& u, const std::string& v) const {
    for (const auto& ch : channels)
      if (ch.edge.first == u && ch.edge.second == v) return &ch;
    return nullptr;
  }
};

namespace detail {

inline void check_memory_capacities(const PhysicalPlan& plan) {
  for (const auto& site : plan.topology.sites) {
    double mem = plan.static_mem_at(site.id);
    if (mem > site.mem_mb)
      throw CapacityError("memory demand " + format_double(mem) + " MiB exceeds " +
                          site.id + " capacity " + format_double(site.mem_mb) + " MiB");
  }
}

}  // namespace detail

inline PhysicalPlan compile(const LogicalSpec& spec, const Topology& topology,
                            const Placement& placement) {
  {
    ValidationReport report = validate(spec);
    if (!report.ok())
      throw PreconditionError("spec has validation findings; first: " +
                              report.findings.front().code);
  }

  const std::string cloud_id = topology.cloud_site().id;

  for (const auto& s : spec.sources) {
    const Site* site = topology.find_site(s.site_id);
    if (!site) throw PlacementError("source " + s.id + " names unknown site " + s.site_id);
    if (site->site_type != SiteType::edge)
      throw PlacementError("source " + s.id + " must attach to an edge site");
  }
  for (const auto& k : spec.sinks) {
    const Site* site = topology.find_site(k.site_id);
    if (!site || site->site_type != SiteType::cloud)
      throw PlacementError("sink " + k.id + " must live at the cloud site");
  }
  for (const auto& c : spec.components) {
    auto it = placement.component_sites.find(c.id);
    if (it == placement.component_sites.end())
      throw PlacementError("component " + c.id + " is unplaced");
    if (!topology.find_site(it->second))
      throw PlacementError("component " + c.id + " placed at unknown site " + it->second);
    if (c.pinned_site && *c.pinned_site != it->second)
      throw PlacementError("component " + c.id + " is pinned to " + *c.pinned_site);
  }
  for (const auto& [id, site] : placement.component_sites)
    if (!spec.find_component(id))
      throw PlacementError("placement names unknown component " + id);

  PhysicalPlan plan;
  plan.spec = spec;
  plan.topology = topology;
  plan.placement = placement;

  for (const auto& [u, v] : spec.edges) {
    Channel ch;
    ch.edge = {u, v};
    ch.from_site = plan.site_of(u);
    ch.to_site = plan.site_of(v);
    if (ch.from_site == ch.to_site) {
      ch.kind = ChannelKind::local;
    } else {
      ch.kind = ChannelKind::uplink;
      const LinkSpec* link = topology.find_link(ch.from_site, ch.to_site);
      if (!link)
        throw PlacementError("no link between " + ch.from_site + " and " + ch.to_site +
                             " for edge " + u + "->" + v);
      ch.link_edge_site = link->from;
      ch.encoder_id = "enc:" + u + "->" + v;
      ch.decoder_id = "dec:" + u + "->" + v;
      CodecCpuTable table;  // static modeling constants; runtime metering is per codec
      plan.injected.push_back({ch.encoder_id, ch.from_site,
                               table.encode_cost({CodecBase::json, false}),
                               CodecRole::encoder});
      plan.injected.push_back({ch.decoder_id, ch.to_site,
                               table.decode_cost({CodecBase::json, false}),
                               CodecRole::decoder});
    }
    plan.channels.push_back(std::move(ch));
  }

  detail::check_memory_capacities(plan);
  return plan;
}

inline void require_movable(const PhysicalPlan& plan, const std::string& component) {
  const ComponentDecl* c = plan.spec.find_component(component);
  if (!c) throw PlacementError("'" + component + "' is not a movable component");
  if (c->pinned_site) throw PlacementError("component " + component + " is pinned");
}

inline PhysicalPlan apply_move(const PhysicalPlan& plan, const std::string& component,
                               const std::string& target_site) {
  require_movable(plan, component);
  if (!plan.topology.find_site(target_site))
    throw PlacementError("unknown target site " + target_site);
  Placement moved = plan.placement;
  moved.component_sites[component] = target_site;
  PhysicalPlan next = compile(plan.spec, plan.topology, moved);
  for (const auto& sh : plan.shadows) {
    next.shadows.push_back(sh);
  }
  detail::check_memory_capacities(next);
  return next;
}

// Shadow replica: duplicated input, discarded output, metered separately.
inline PhysicalPlan add_shadow(const PhysicalPlan& plan, const std::string& component,
                               const std::string& target_site) {
  require_movable(plan, component);
  if (!plan.topology.find_site(target_site))
    throw PlacementError("unknown target site " + target_site);
  for (const auto& sh : plan.shadows)
    if (sh.component == component) throw ShadowExists(component);
  PhysicalPlan next = plan;
  next.shadows.push_back({component, target_site});
  detail::check_memory_capacities(next);
  return next;
}

inline PhysicalPlan remove_shadow(const PhysicalPlan& plan, const std::string& component) {
  PhysicalPlan next = plan;
  std::erase_if(next.shadows, [&](const ShadowSpec& sh) { return sh.component == component; });
  return next;
}

// Deterministic text report of the physical layout (the `compile`
// subcommand's output).
inline std::string plan_report(const PhysicalPlan& plan) {
  std::string out;
  out += "plan for " + plan.spec.name + "\n";
  out += "placements:\n";
  for (const auto& s : plan.spec.sources)
    out += "  " + s.id + " @ " + s.site_id + " (source)\n";
  for (const auto& c : plan.spec.components)
    out += "  " + c.id + " @ " + plan.placement.component_sites.at(c.id) + "\n";
  for (const auto& k : plan.spec.sinks)
    out += "  " + k.id + " @ " + k.site_id + " (sink)\n";
  out += "channels:\n";
  for (const auto& ch : plan.channels) {
    out += "  " + ch.id() + " " +
           (ch.kind == ChannelKind::uplink ? "uplink " + ch.from_site + "=>" + ch.to_site
                                           : "local @ " + ch.from_site) +
           "\n";
  }
  out += "injected:\n";
  for (const auto& c : plan.injected)
    out += "  " + c.id + " @ " + c.site_id + "\n";
  for (const auto& sh : plan.shadows)
    out += "shadow: " + sh.component + " @ " + sh.site_id + "\n";
  return out;
}

// --- placement file ----------------------------------------------------------

inline Placement parse_placement(const std::string& text) {
  Json j = parse_json_text(text);
  jsonio::expect_object(j, "$");
  Placement p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string())
      throw FieldError("$." + it.key(), "expected a site id string");
    p.component_sites[it.key()] = it.value().get<std::string>();
  }
  return p;
}

inline std::string serialize_placement(const Placement& p) {
  Json j = Json::object();
  for (const auto& [comp, site] : p.component_sites) j[comp] = site;
  return j.dump(2);
}

}  // namespace edgeflow
