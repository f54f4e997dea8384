#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgeflow/analysis.hpp"
#include "edgeflow/fabric.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Greedy placement loop: everything starts in the cloud, then the move with
// the best saving per unit of edge CPU consumed is applied until no move
// clears the minimum saving or the edges are full.
// ---------------------------------------------------------------------------

struct OptimizerConfig {
  int max_iterations = 100;
  double min_saving_usd_per_hour = 1e-6;
  std::vector<std::string> candidate_sites;  // empty = all edge sites
  bool use_shadowing = false;
  double shadow_duration_s = 30.0;
};

struct MoveRecord {
  int iteration = 0;
  std::string component;
  std::string from_site;
  std::string to_site;
  std::int64_t predicted_delta_micro = 0;
  std::int64_t realized_total_micro = 0;
  double aggregate_edge_cpu_util = 0;
  std::map<std::string, double> edge_cpu_util;  // per edge site, after the move
};

inline Placement initial_placement(const LogicalSpec& spec, const Topology& topology) {
  const std::string cloud = topology.cloud_site().id;
  Placement p;
  for (const auto& c : spec.components)
    p.component_sites[c.id] = c.pinned_site ? *c.pinned_site : cloud;
  return p;
}

// Aggregate and per-site edge utilization from modeled demand.
inline std::pair<double, std::map<std::string, double>> edge_utilization(
    const PhysicalPlan& plan, const RateVector& rates) {
  auto used = modeled_site_cpu(plan, rates);
  double total_used = 0, total_cap = 0;
  std::map<std::string, double> per_site;
  for (const auto& site : plan.topology.sites) {
    if (site.site_type != SiteType::edge) continue;
    per_site[site.id] = used[site.id] / site.cpu_units;
    total_used += used[site.id];
    total_cap += site.cpu_units;
  }
  return {total_cap > 0 ? total_used / total_cap : 0.0, per_site};
}

struct SelectedMove {
  std::string component;
  std::string target_site;
  Prediction prediction;
};

// One greedy step: rank movable components by their current modeled cost,
// predict each against every candidate site, and return the feasible move
// with the highest saving per fraction of target CPU consumed.
inline std::optional<SelectedMove> select_move(
    const PhysicalPlan& plan, const OptimizerConfig& config,
    const std::set<std::pair<std::string, std::string>>& excluded = {}) {
  RateVector rates = steady_rates(plan.spec);
  CostBreakdown current = cost_rate_modeled(plan, rates);

  std::vector<std::string> sites = config.candidate_sites;
  if (sites.empty()) {
    for (const auto& s : plan.topology.sites)
      if (s.site_type == SiteType::edge) sites.push_back(s.id);
  }
  std::sort(sites.begin(), sites.end());

  // Most expensive first; ties break lexicographically.
  std::vector<std::pair<std::int64_t, std::string>> ranked;
  for (const auto& c : plan.spec.components) {
    if (c.pinned_site) continue;
    ranked.emplace_back(-current.entity_total(c.id), c.id);
  }
  std::sort(ranked.begin(), ranked.end());

  constexpr double kEps = 1e-9;
  std::optional<SelectedMove> best;
  double best_efficiency = 0, best_saving = 0;

  for (const auto& [neg_cost, comp] : ranked) {
    for (const auto& site : sites) {
      if (plan.placement.component_sites.at(comp) == site) continue;
      if (excluded.count({comp, site})) continue;
      Prediction p;
      try {
        p = predict_move(plan, comp, site);
      } catch (const PlacementError&) {
        continue;  // no link for the resulting channels, pinned, etc.
      }
      if (!p.feasible) continue;
      double saving = -static_cast<double>(p.delta_micro) / 1e6;
      if (saving < config.min_saving_usd_per_hour) continue;
      const Site* target = plan.topology.find_site(site);
      double fraction = p.footprint_cpu_units / target->cpu_units;
      double efficiency = saving / std::max(fraction, kEps);
      bool better = false;
      if (!best) better = true;
      else if (efficiency != best_efficiency) better = efficiency > best_efficiency;
      else if (saving != best_saving) better = saving > best_saving;
      else if (comp != best->component) better = comp < best->component;
      else better = site < best->target_site;
      if (better) {
        best = SelectedMove{comp, site, p};
        best_efficiency = efficiency;
        best_saving = saving;
      }
    }
  }
  return best;
}

struct OptimizeResult {
  Placement final_placement;
  std::vector<MoveRecord> moves;
  std::int64_t initial_total_micro = 0;
  double initial_edge_cpu_util = 0;
  std::int64_t final_total_micro = 0;
};

inline OptimizeResult optimize(const LogicalSpec& spec, const Topology& topology,
                               const OptimizerConfig& config,
                               const SimulatorAccess* shadow_access = nullptr) {
  if (config.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  Placement placement = initial_placement(spec, topology);
  PhysicalPlan plan = compile(spec, topology, placement);
  RateVector rates = steady_rates(spec);

  OptimizeResult result;
  result.initial_total_micro = cost_rate_modeled(plan, rates).total_micro;
  result.initial_edge_cpu_util = edge_utilization(plan, rates).first;

  std::int64_t last_total = result.initial_total_micro;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    std::set<std::pair<std::string, std::string>> excluded;
    std::optional<SelectedMove> move;
    while (true) {
      move = select_move(plan, config, excluded);
      if (!move) break;
      if (config.use_shadowing && shadow_access) {
        Prediction refined =
            refine_with_shadow(move->prediction, plan, *shadow_access, config.shadow_duration_s);
        if (!refined.feasible ||
            -static_cast<double>(refined.delta_micro) / 1e6 < config.min_saving_usd_per_hour) {
          excluded.insert({move->component, move->target_site});
          continue;
        }
        move->prediction = refined;
      }
      break;
    }
    if (!move) break;

    std::string from = plan.placement.component_sites.at(move->component);
    plan = apply_move(plan, move->component, move->target_site);

    MoveRecord rec;
    rec.iteration = iter;
    rec.component = move->component;
    rec.from_site = from;
    rec.to_site = move->target_site;
    rec.predicted_delta_micro = move->prediction.delta_micro;
    rec.realized_total_micro = cost_rate_modeled(plan, rates).total_micro;
    auto [agg, per_site] = edge_utilization(plan, rates);
    rec.aggregate_edge_cpu_util = agg;
    rec.edge_cpu_util = std::move(per_site);
    last_total = rec.realized_total_micro;
    result.moves.push_back(std::move(rec));
  }

  result.final_placement = plan.placement;
  result.final_total_micro = last_total;
  return result;
}

inline std::string moves_to_csv(const OptimizeResult& r) {
  std::string out = "iteration,component,from,to,delta_usd_h_micro,total_usd_h_micro,edge_cpu_util\n";
  for (const auto& m : r.moves) {
    out += format_i64(m.iteration) + ',' + m.component + ',' + m.from_site + ',' + m.to_site +
           ',' + format_i64(m.predicted_delta_micro) + ',' + format_i64(m.realized_total_micro) +
           ',' + format_double(m.aggregate_edge_cpu_util) + '\n';
  }
  return out;
}

inline std::string figure2_to_csv(const OptimizeResult& r) {
  std::string out = "iteration,total_usd_h_micro,edge_cpu_util\n";
  out += "0," + format_i64(r.initial_total_micro) + ',' +
         format_double(r.initial_edge_cpu_util) + '\n';
  for (const auto& m : r.moves) {
    out += format_i64(m.iteration) + ',' + format_i64(m.realized_total_micro) + ',' +
           format_double(m.aggregate_edge_cpu_util) + '\n';
  }
  return out;
}

}  // namespace edgeflow
