#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgeflow/fabric.hpp"
#include "edgeflow/simulator.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Cost and what-if analysis. Money is integer micro-dollars per hour so
// breakdowns add exactly; each dimension is rounded once at the entity level
// and totals are plain integer sums.
// ---------------------------------------------------------------------------

inline constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

inline std::int64_t to_micro_usd(double dollars) { return std::llround(dollars * 1e6); }

struct RateVector {
  struct NodeRates {
    double msgs_in = 0;
    double msgs_out = 0;
    double bytes_out = 0;  // declared mean bytes, per second
  };
  std::map<std::string, NodeRates> nodes;

  const NodeRates& at(const std::string& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw MissingMetric(id);
    return it->second;
  }
};

// Steady-state rate propagation in topological order; a component with
// several in-edges sums its inputs, and every out-edge carries the full
// output stream.
inline RateVector steady_rates(const LogicalSpec& spec) {
  RateVector rv;
  for (const auto& s : spec.sources) {
    auto& n = rv.nodes[s.id];
    n.msgs_out = s.rate;
    n.bytes_out = s.rate * static_cast<double>(s.bytes_per_msg);
  }
  for (const auto& id : topological_order(spec)) {
    if (spec.find_source(id)) continue;
    double in = 0;
    for (const auto& [u, v] : spec.edges)
      if (v == id) in += rv.nodes[u].msgs_out;
    auto& n = rv.nodes[id];
    n.msgs_in = in;
    if (const ComponentDecl* c = spec.find_component(id)) {
      n.msgs_out = in * c->selectivity;
      n.bytes_out = n.msgs_out * static_cast<double>(c->out_bytes_per_msg);
    }
  }
  return rv;
}

struct CostBreakdown {
  struct Entry {
    std::string entity;
    std::string dimension;  // compute, invocations, ingress, storage_write, provisioned, link
    std::int64_t usd_per_hour_micro = 0;
  };
  std::vector<Entry> entries;
  std::int64_t total_micro = 0;

  std::int64_t entity_total(const std::string& entity) const {
    std::int64_t t = 0;
    for (const auto& e : entries)
      if (e.entity == entity) t += e.usd_per_hour_micro;
    return t;
  }
};

namespace costdetail {

inline void add(CostBreakdown& b, const std::string& entity, const std::string& dim,
                double dollars_per_hour) {
  std::int64_t micro = to_micro_usd(dollars_per_hour);
  if (micro == 0) return;
  b.entries.push_back({entity, dim, micro});
  b.total_micro += micro;
}

// Per-channel steady byte rate: what the producer offers, in declared bytes.
inline double channel_bytes_per_s(const LogicalSpec& spec, const RateVector& rates,
                                  const std::string& producer) {
  return rates.at(producer).bytes_out;
}

}  // namespace costdetail

// Modeled cost of a plan at the given rates. `cpu_rate_overrides` substitutes
// observed cpu-units/s for the linear model of specific components (shadow
// refinement uses this).
inline CostBreakdown cost_rate_modeled(
    const PhysicalPlan& plan, const RateVector& rates,
    const std::map<std::string, double>& cpu_rate_overrides = {}) {
  CostBreakdown b;
  const Topology& topo = plan.topology;

  for (const auto& c : plan.spec.components) {
    const Site* site = topo.find_site(plan.placement.component_sites.at(c.id));
    const auto& r = rates.at(c.id);
    double cpu_rate;
    if (auto it = cpu_rate_overrides.find(c.id); it != cpu_rate_overrides.end())
      cpu_rate = it->second;
    else
      cpu_rate = r.msgs_in * c.cpu_units_per_msg / site->speed_factor;
    costdetail::add(b, c.id, "compute",
                    cpu_rate * site->pricing.per_cpu_unit_second * 3600.0);
    costdetail::add(b, c.id, "invocations",
                    r.msgs_in * 3600.0 / 1e6 * site->pricing.per_million_invocations);
  }

  for (const auto& s : plan.spec.sinks) {
    const Site* site = topo.find_site(s.site_id);
    const auto& r = rates.at(s.id);
    costdetail::add(b, s.id, "invocations",
                    r.msgs_in * 3600.0 / 1e6 * site->pricing.per_million_invocations);
    if (s.kind == SinkKind::storage) {
      double bytes_in = 0;
      for (const auto& [u, v] : plan.spec.edges)
        if (v == s.id) bytes_in += costdetail::channel_bytes_per_s(plan.spec, rates, u);
      costdetail::add(b, s.id, "storage_write",
                      bytes_in * 3600.0 / kGiB * site->pricing.per_gb_storage_write);
    }
  }

  // Injected codec components: charged like any component, and the decoder
  // side also picks up the ingress charge for off-site inbound bytes.
  for (const auto& ch : plan.channels) {
    if (ch.kind != ChannelKind::uplink) continue;
    const auto& producer_rates = rates.at(ch.edge.first);
    double msgs = producer_rates.msgs_out;
    double bytes = producer_rates.bytes_out;
    const Site* from = topo.find_site(ch.from_site);
    const Site* to = topo.find_site(ch.to_site);
    for (const auto& cc : plan.injected) {
      if (cc.id != ch.encoder_id && cc.id != ch.decoder_id) continue;
      const Site* site = cc.id == ch.encoder_id ? from : to;
      double cpu_rate = msgs * cc.cpu_units_per_msg / site->speed_factor;
      costdetail::add(b, cc.id, "compute",
                      cpu_rate * site->pricing.per_cpu_unit_second * 3600.0);
      costdetail::add(b, cc.id, "invocations",
                      msgs * 3600.0 / 1e6 * site->pricing.per_million_invocations);
    }
    costdetail::add(b, ch.decoder_id, "ingress",
                    bytes * 3600.0 / kGiB * to->pricing.per_gb_ingress);
    const LinkSpec* link = topo.find_link(ch.from_site, ch.to_site);
    costdetail::add(b, "link:" + ch.id(), "link",
                    bytes * 3600.0 / kGiB * link->per_gb_cost);
  }

  for (const auto& site : topo.sites) {
    if (site.pricing.provisioned_unit && site.pricing.provisioned_unit->units > 0)
      costdetail::add(b, "site:" + site.id, "provisioned",
                      static_cast<double>(site.pricing.provisioned_unit->units) *
                          site.pricing.provisioned_unit->per_unit_hour);
  }

  return b;
}

// Observed cost from a metrics window: same pricing formula, but CPU,
// message and byte figures come from measurements (encoded bytes on links
// and ingress, canonical bytes written at sinks).
inline CostBreakdown cost_rate_observed(const PhysicalPlan& plan, const MetricsWindow& w) {
  CostBreakdown b;
  const Topology& topo = plan.topology;
  double window_s = w.end_s - w.start_s;
  if (window_s <= 0) throw MissingMetric("empty metrics window");
  double per_hour = 3600.0 / window_s;

  auto comp_metrics = [&](const std::string& id) -> const ComponentMetrics& {
    auto it = w.components.find(id);
    if (it == w.components.end()) throw MissingMetric(id);
    return it->second;
  };

  for (const auto& c : plan.spec.components) {
    const Site* site = topo.find_site(plan.placement.component_sites.at(c.id));
    const auto& m = comp_metrics(c.id);
    costdetail::add(b, c.id, "compute",
                    m.cpu_units_used * per_hour * site->pricing.per_cpu_unit_second);
    costdetail::add(b, c.id, "invocations",
                    m.msgs_in * per_hour / 1e6 * site->pricing.per_million_invocations);
  }
  for (const auto& s : plan.spec.sinks) {
    const Site* site = topo.find_site(s.site_id);
    const auto& m = comp_metrics(s.id);
    costdetail::add(b, s.id, "invocations",
                    m.msgs_in * per_hour / 1e6 * site->pricing.per_million_invocations);
    if (s.kind == SinkKind::storage)
      costdetail::add(b, s.id, "storage_write",
                      m.bytes_in * per_hour / kGiB * site->pricing.per_gb_storage_write);
  }
  for (const auto& ch : plan.channels) {
    if (ch.kind != ChannelKind::uplink) continue;
    auto cit = w.channels.find(ch.id());
    if (cit == w.channels.end()) throw MissingMetric(ch.id());
    const auto& cm = cit->second;
    const Site* from = topo.find_site(ch.from_site);
    const Site* to = topo.find_site(ch.to_site);
    const auto& enc = comp_metrics(ch.encoder_id);
    const auto& dec = comp_metrics(ch.decoder_id);
    costdetail::add(b, ch.encoder_id, "compute",
                    enc.cpu_units_used * per_hour * from->pricing.per_cpu_unit_second);
    costdetail::add(b, ch.encoder_id, "invocations",
                    enc.msgs_in * per_hour / 1e6 * from->pricing.per_million_invocations);
    costdetail::add(b, ch.decoder_id, "compute",
                    dec.cpu_units_used * per_hour * to->pricing.per_cpu_unit_second);
    costdetail::add(b, ch.decoder_id, "invocations",
                    dec.msgs_in * per_hour / 1e6 * to->pricing.per_million_invocations);
    costdetail::add(b, ch.decoder_id, "ingress",
                    cm.bytes_sent_encoded * per_hour / kGiB * to->pricing.per_gb_ingress);
    const LinkSpec* link = topo.find_link(ch.from_site, ch.to_site);
    costdetail::add(b, "link:" + ch.id(), "link",
                    cm.bytes_sent_encoded * per_hour / kGiB * link->per_gb_cost);
  }
  for (const auto& site : topo.sites) {
    if (site.pricing.provisioned_unit && site.pricing.provisioned_unit->units > 0)
      costdetail::add(b, "site:" + site.id, "provisioned",
                      static_cast<double>(site.pricing.provisioned_unit->units) *
                          site.pricing.provisioned_unit->per_unit_hour);
  }
  return b;
}

// Modeled CPU demand per site (components plus injected codecs), used for
// feasibility checks and utilization reporting.
inline std::map<std::string, double> modeled_site_cpu(const PhysicalPlan& plan,
                                                      const RateVector& rates) {
  std::map<std::string, double> used;
  for (const auto& site : plan.topology.sites) used[site.id] = 0.0;
  for (const auto& c : plan.spec.components) {
    const std::string& site_id = plan.placement.component_sites.at(c.id);
    const Site* site = plan.topology.find_site(site_id);
    used[site_id] += rates.at(c.id).msgs_in * c.cpu_units_per_msg / site->speed_factor;
  }
  for (const auto& ch : plan.channels) {
    if (ch.kind != ChannelKind::uplink) continue;
    double msgs = rates.at(ch.edge.first).msgs_out;
    for (const auto& cc : plan.injected) {
      if (cc.id != ch.encoder_id && cc.id != ch.decoder_id) continue;
      const Site* site = plan.topology.find_site(cc.site_id);
      used[cc.site_id] += msgs * cc.cpu_units_per_msg / site->speed_factor;
    }
  }
  return used;
}

enum class PredictionConfidence { modeled, shadow_refined };

struct Prediction {
  std::string component;
  std::string target_site;
  std::int64_t predicted_total_micro = 0;
  std::int64_t delta_micro = 0;  // negative = saving
  bool feasible = false;
  double footprint_cpu_units = 0;
  double footprint_mem_mb = 0;
  PredictionConfidence confidence = PredictionConfidence::modeled;
};

inline Prediction predict_move(const PhysicalPlan& plan, const std::string& component,
                               const std::string& target_site) {
  require_movable(plan, component);
  const Site* target = plan.topology.find_site(target_site);
  if (!target) throw PlacementError("unknown target site " + target_site);

  RateVector rates = steady_rates(plan.spec);
  CostBreakdown current = cost_rate_modeled(plan, rates);
  const ComponentDecl* decl = plan.spec.find_component(component);

  Prediction p;
  p.component = component;
  p.target_site = target_site;
  p.footprint_cpu_units =
      rates.at(component).msgs_in * decl->cpu_units_per_msg / target->speed_factor;
  p.footprint_mem_mb = decl->mem_mb;

  PhysicalPlan moved;
  try {
    moved = apply_move(plan, component, target_site);
  } catch (const CapacityError&) {
    p.feasible = false;
    p.predicted_total_micro = current.total_micro;
    p.delta_micro = 0;
    return p;
  }

  CostBreakdown predicted = cost_rate_modeled(moved, rates);
  p.predicted_total_micro = predicted.total_micro;
  p.delta_micro = predicted.total_micro - current.total_micro;

  auto used = modeled_site_cpu(moved, rates);
  p.feasible = used[target_site] <= target->cpu_units + 1e-12 &&
               moved.static_mem_at(target_site) <= target->mem_mb;
  return p;
}

// --- shadow refinement --------------------------------------------------------

// What refine_with_shadow needs from the host: a fresh workload stream and
// the simulation configuration to run it under.
struct SimulatorAccess {
  std::function<std::unique_ptr<RecordStream>()> workload_factory;
  SimConfig config;
};

// Runs the plan with a shadow replica at the prediction's target, replaces
// the modeled footprint with the shadow's observed demand, and re-derives
// the delta from the observed cpu rate.
inline Prediction refine_with_shadow(const Prediction& prediction, const PhysicalPlan& plan,
                                     const SimulatorAccess& access,
                                     double shadow_duration_s) {
  if (!prediction.feasible)
    throw PreconditionError("refine_with_shadow requires a feasible prediction");
  PhysicalPlan shadowed = add_shadow(plan, prediction.component, prediction.target_site);

  SimConfig config = access.config;
  config.duration_s = shadow_duration_s;
  auto stream = access.workload_factory();
  SimResult result = run_simulation(shadowed, *stream, config);

  const std::string shadow_id = "shadow:" + prediction.component;
  auto it = result.series.totals.components.find(shadow_id);
  if (it == result.series.totals.components.end()) throw MissingMetric(shadow_id);
  double elapsed = result.series.totals.end_s;
  double observed_cpu_rate = elapsed > 0 ? it->second.cpu_units_used / elapsed : 0.0;

  Prediction refined = prediction;
  refined.confidence = PredictionConfidence::shadow_refined;
  refined.footprint_cpu_units = observed_cpu_rate;

  RateVector rates = steady_rates(plan.spec);
  CostBreakdown current = cost_rate_modeled(plan, rates);
  PhysicalPlan moved = apply_move(plan, prediction.component, prediction.target_site);
  CostBreakdown predicted =
      cost_rate_modeled(moved, rates, {{prediction.component, observed_cpu_rate}});
  refined.predicted_total_micro = predicted.total_micro;
  refined.delta_micro = predicted.total_micro - current.total_micro;

  const Site* target = plan.topology.find_site(prediction.target_site);
  auto used = modeled_site_cpu(moved, rates);
  double others = used[prediction.target_site] -
                  rates.at(prediction.component).msgs_in *
                      plan.spec.find_component(prediction.component)->cpu_units_per_msg /
                      target->speed_factor;
  refined.feasible = others + observed_cpu_rate <= target->cpu_units + 1e-12 &&
                     moved.static_mem_at(prediction.target_site) <= target->mem_mb;
  return refined;
}

// --- presentation ---------------------------------------------------------------

inline std::string cost_breakdown_table(const CostBreakdown& b) {
  std::string out;
  out += "entity                          dimension        usd/h\n";
  for (const auto& e : b.entries) {
    std::string entity = e.entity;
    if (entity.size() < 30) entity.resize(30, ' ');
    std::string dim = e.dimension;
    if (dim.size() < 14) dim.resize(14, ' ');
    out += entity + "  " + dim + "  " +
           format_double(static_cast<double>(e.usd_per_hour_micro) / 1e6) + "\n";
  }
  out += "total: " + format_double(static_cast<double>(b.total_micro) / 1e6) + " usd/h\n";
  return out;
}

inline std::string cost_breakdown_csv(const CostBreakdown& b) {
  std::string out = "entity,dimension,usd_per_hour_micro\n";
  for (const auto& e : b.entries)
    out += e.entity + ',' + e.dimension + ',' + format_i64(e.usd_per_hour_micro) + '\n';
  out += "total,total," + format_i64(b.total_micro) + '\n';
  return out;
}

}  // namespace edgeflow
