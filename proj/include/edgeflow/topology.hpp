#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edgeflow/jsonio.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Deployment environment: a star of edge sites around a single cloud site.
// Capacities are rates (cpu-units per second of a reference core); pricing
// follows a per-dimension cloud billing shape. Immutable after parse.
// ---------------------------------------------------------------------------

constexpr double kCloudCpuSentinel = 1e6;  // "effectively unbounded"

struct ProvisionedUnit {
  std::string unit_name;
  std::uint64_t units = 0;
  double per_unit_hour = 0.0;

  bool operator==(const ProvisionedUnit&) const = default;
};

struct PricingTable {
  double per_cpu_unit_second = 0.0;
  double per_million_invocations = 0.0;
  double per_gb_ingress = 0.0;
  double per_gb_storage_write = 0.0;
  std::optional<ProvisionedUnit> provisioned_unit;

  bool operator==(const PricingTable&) const = default;
};

enum class SiteType { edge, cloud };

inline const char* to_string(SiteType t) { return t == SiteType::edge ? "edge" : "cloud"; }

struct Site {
  std::string id;
  SiteType site_type = SiteType::edge;
  double cpu_units = 1.0;    // capacity, reference-core seconds per second
  double mem_mb = 0.0;
  double speed_factor = 1.0; // per-core speed relative to the reference core
  PricingTable pricing;

  bool operator==(const Site&) const = default;
};

struct BandwidthSchedule {
  // (start_second, cap_bits_per_s), start_seconds strictly increasing, first 0.
  std::vector<std::pair<double, double>> steps;

  bool operator==(const BandwidthSchedule&) const = default;
};

struct LinkSpec {
  std::string from;  // edge site
  std::string to;    // cloud site
  BandwidthSchedule bandwidth_schedule;
  double latency_ms = 0.0;
  double per_gb_cost = 0.0;

  bool operator==(const LinkSpec&) const = default;
};

struct Topology {
  std::vector<Site> sites;
  std::vector<LinkSpec> links;

  bool operator==(const Topology&) const = default;

  const Site* find_site(const std::string& id) const {
    for (const auto& s : sites)
      if (s.id == id) return &s;
    return nullptr;
  }

  const Site& cloud_site() const {
    for (const auto& s : sites)
      if (s.site_type == SiteType::cloud) return s;
    throw InvariantError("NO_CLOUD", "topology has no cloud site");
  }

  // The star link between an edge site and the cloud, whichever way the
  // traffic flows. Null when the two sites are not directly connected.
  const LinkSpec* find_link(const std::string& a, const std::string& b) const {
    for (const auto& l : links)
      if ((l.from == a && l.to == b) || (l.from == b && l.to == a)) return &l;
    return nullptr;
  }
};

// Cap of the last step with start_second <= t (right-continuous step function).
inline double bandwidth_at(const LinkSpec& link, double t_seconds) {
  double cap = link.bandwidth_schedule.steps.front().second;
  for (const auto& [start, c] : link.bandwidth_schedule.steps) {
    if (start <= t_seconds) cap = c;
    else break;
  }
  return cap;
}

// Componentwise capacity minus usage, floored at zero.
inline std::pair<double, double> edge_headroom(const Site& site, double used_cpu,
                                               double used_mem) {
  return {std::max(0.0, site.cpu_units - used_cpu), std::max(0.0, site.mem_mb - used_mem)};
}

// --- Parsing / serialization ------------------------------------------------

inline Topology parse_topology(const std::string& text) {
  using namespace jsonio;
  Json j = parse_json_text(text);
  expect_object(j, "$");
  reject_unknown_keys(j, {"sites", "links"}, "$");

  Topology topo;
  const Json& sites = require(j, "sites", "$");
  expect_array(sites, "$.sites");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::string path = "sites[" + std::to_string(i) + "]";
    const Json& s = sites[i];
    expect_object(s, path);
    reject_unknown_keys(s, {"id", "site_type", "cpu_units", "mem_mb", "speed_factor", "pricing"},
                        path);
    Site site;
    site.id = get_string(s, "id", path);
    std::string type = get_string(s, "site_type", path);
    if (type == "edge") site.site_type = SiteType::edge;
    else if (type == "cloud") site.site_type = SiteType::cloud;
    else throw FieldError(path + ".site_type", "must be 'edge' or 'cloud'");
    site.cpu_units = get_number(s, "cpu_units", path);
    if (site.cpu_units <= 0) throw FieldError(path + ".cpu_units", "must be > 0");
    site.mem_mb = get_number(s, "mem_mb", path);
    site.speed_factor = get_number(s, "speed_factor", path);
    if (site.speed_factor <= 0) throw FieldError(path + ".speed_factor", "must be > 0");

    const Json& p = require(s, "pricing", path);
    expect_object(p, path + ".pricing");
    reject_unknown_keys(p,
                        {"per_cpu_unit_second", "per_million_invocations", "per_gb_ingress",
                         "per_gb_storage_write", "provisioned_unit"},
                        path + ".pricing");
    site.pricing.per_cpu_unit_second = get_number(p, "per_cpu_unit_second", path + ".pricing");
    site.pricing.per_million_invocations =
        get_number(p, "per_million_invocations", path + ".pricing");
    site.pricing.per_gb_ingress = get_number(p, "per_gb_ingress", path + ".pricing");
    site.pricing.per_gb_storage_write =
        get_number(p, "per_gb_storage_write", path + ".pricing");
    for (double rate : {site.pricing.per_cpu_unit_second, site.pricing.per_million_invocations,
                        site.pricing.per_gb_ingress, site.pricing.per_gb_storage_write})
      if (rate < 0) throw FieldError(path + ".pricing", "rates must be >= 0");
    if (p.contains("provisioned_unit")) {
      const Json& u = p["provisioned_unit"];
      std::string upath = path + ".pricing.provisioned_unit";
      expect_object(u, upath);
      reject_unknown_keys(u, {"unit_name", "units", "per_unit_hour"}, upath);
      ProvisionedUnit pu;
      pu.unit_name = get_string(u, "unit_name", upath);
      pu.units = get_uint(u, "units", upath);
      pu.per_unit_hour = get_number(u, "per_unit_hour", upath);
      if (pu.per_unit_hour < 0) throw FieldError(upath + ".per_unit_hour", "must be >= 0");
      site.pricing.provisioned_unit = pu;
    }
    topo.sites.push_back(std::move(site));
  }

  const Json& links = require(j, "links", "$");
  expect_array(links, "$.links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    std::string path = "links[" + std::to_string(i) + "]";
    const Json& l = links[i];
    expect_object(l, path);
    reject_unknown_keys(l, {"from", "to", "bandwidth_schedule", "latency_ms", "per_gb_cost"},
                        path);
    LinkSpec link;
    link.from = get_string(l, "from", path);
    link.to = get_string(l, "to", path);
    if (link.from == link.to) throw FieldError(path, "from and to must differ");
    link.latency_ms = get_number(l, "latency_ms", path);
    if (link.latency_ms < 0) throw FieldError(path + ".latency_ms", "must be >= 0");
    link.per_gb_cost = get_number(l, "per_gb_cost", path);
    if (link.per_gb_cost < 0) throw FieldError(path + ".per_gb_cost", "must be >= 0");

    const Json& sched = require(l, "bandwidth_schedule", path);
    expect_array(sched, path + ".bandwidth_schedule");
    if (sched.empty()) throw FieldError(path + ".bandwidth_schedule", "must be nonempty");
    for (std::size_t k = 0; k < sched.size(); ++k) {
      const Json& step = sched[k];
      std::string spath = path + ".bandwidth_schedule[" + std::to_string(k) + "]";
      if (!step.is_array() || step.size() != 2 || !step[0].is_number() || !step[1].is_number())
        throw FieldError(spath, "expected [start_second, cap_bits_per_s]");
      double start = step[0].get<double>();
      double cap = step[1].get<double>();
      if (cap < 1.0) throw FieldError(spath, "cap must be >= 1 bit/s");
      if (k == 0 && start != 0.0) throw FieldError(spath, "first start_second must be 0");
      if (k > 0 && start <= link.bandwidth_schedule.steps.back().first)
        throw FieldError(spath, "start_seconds must be strictly increasing");
      link.bandwidth_schedule.steps.emplace_back(start, cap);
    }
    topo.links.push_back(std::move(link));
  }

  // Structural invariants beyond per-field checks.
  std::map<std::string, int> site_count;
  int clouds = 0;
  for (const auto& s : topo.sites) {
    if (++site_count[s.id] > 1) throw InvariantError("DUP_SITE", "duplicate site id " + s.id);
    if (s.site_type == SiteType::cloud) ++clouds;
    if (s.site_type == SiteType::edge && s.cpu_units >= kCloudCpuSentinel)
      throw InvariantError("EDGE_UNBOUNDED", "edge site " + s.id + " must have finite cpu");
  }
  if (clouds == 0) throw InvariantError("NO_CLOUD", "topology needs exactly one cloud site");
  if (clouds > 1) throw InvariantError("MULTI_CLOUD", "topology needs exactly one cloud site");

  const std::string cloud_id = topo.cloud_site().id;
  std::map<std::string, int> uplinks;
  for (const auto& l : topo.links) {
    if (!topo.find_site(l.from)) throw InvariantError("UNKNOWN_SITE", "link from " + l.from);
    if (!topo.find_site(l.to)) throw InvariantError("UNKNOWN_SITE", "link to " + l.to);
    bool edge_to_cloud = l.to == cloud_id && topo.find_site(l.from)->site_type == SiteType::edge;
    if (!edge_to_cloud)
      throw InvariantError("NOT_STAR", "links must run from an edge site to the cloud");
    ++uplinks[l.from];
  }
  for (const auto& s : topo.sites) {
    if (s.site_type != SiteType::edge) continue;
    if (uplinks[s.id] != 1)
      throw InvariantError("STAR_LINK", "edge site " + s.id +
                                            " must have exactly one link to the cloud");
  }

  return topo;
}

inline std::string serialize_topology(const Topology& topo) {
  Json j;
  j["sites"] = Json::array();
  for (const auto& s : topo.sites) {
    Json pricing = {{"per_cpu_unit_second", s.pricing.per_cpu_unit_second},
                    {"per_million_invocations", s.pricing.per_million_invocations},
                    {"per_gb_ingress", s.pricing.per_gb_ingress},
                    {"per_gb_storage_write", s.pricing.per_gb_storage_write}};
    if (s.pricing.provisioned_unit)
      pricing["provisioned_unit"] = {{"unit_name", s.pricing.provisioned_unit->unit_name},
                                     {"units", s.pricing.provisioned_unit->units},
                                     {"per_unit_hour", s.pricing.provisioned_unit->per_unit_hour}};
    j["sites"].push_back({{"id", s.id},
                          {"site_type", to_string(s.site_type)},
                          {"cpu_units", s.cpu_units},
                          {"mem_mb", s.mem_mb},
                          {"speed_factor", s.speed_factor},
                          {"pricing", std::move(pricing)}});
  }
  j["links"] = Json::array();
  for (const auto& l : topo.links) {
    Json sched = Json::array();
    for (const auto& [start, cap] : l.bandwidth_schedule.steps) sched.push_back({start, cap});
    j["links"].push_back({{"from", l.from},
                          {"to", l.to},
                          {"bandwidth_schedule", std::move(sched)},
                          {"latency_ms", l.latency_ms},
                          {"per_gb_cost", l.per_gb_cost}});
  }
  return j.dump(2);
}

}  // namespace edgeflow
