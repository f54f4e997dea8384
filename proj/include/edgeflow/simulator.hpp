#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edgeflow/comm_opt.hpp"
#include "edgeflow/fabric.hpp"
#include "edgeflow/metrics.hpp"
#include "edgeflow/workload.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Deterministic fixed-tick engine. Per tick: deliver arrived uplink batches,
// run channel controllers on control boundaries, inject due source records,
// process components in topological order under per-site CPU budgets, then
// push encoded bytes through per-channel token buckets. CPU saturation
// queues messages rather than dropping them.
// ---------------------------------------------------------------------------

struct SimConfig {
  std::int64_t tick_ms = 100;
  std::int64_t control_interval_ms = 1000;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  double metrics_window_s = 10.0;
  // Ground-truth CPU profiles that differ from the declared model; this is
  // how experiments inject model error for shadowing to discover.
  std::map<std::string, double> cpu_true_overrides;
};

enum class TransmitResult { sent, sent_overshoot, deferred };

inline const char* to_string(TransmitResult r) {
  switch (r) {
    case TransmitResult::sent: return "sent";
    case TransmitResult::sent_overshoot: return "sent_overshoot";
    case TransmitResult::deferred: return "deferred";
  }
  return "?";
}

// Rate limiter with a bounded burst and a bounded debt: a head-of-line
// payload may push tokens negative, but never below -capacity, so bytes in
// any window of length W stay under cap*W + 2*capacity.
class TokenBucket {
 public:
  TokenBucket(double capacity_bits, double tokens_bits)
      : capacity_bits_(capacity_bits), tokens_bits_(tokens_bits) {}

  // Follows cap changes: burst allowance tracks 2x the current cap.
  void set_capacity(double capacity_bits) {
    capacity_bits_ = capacity_bits;
    tokens_bits_ = std::min(tokens_bits_, capacity_bits_);
  }

  void refill(double bits) { tokens_bits_ = std::min(tokens_bits_ + bits, capacity_bits_); }

  TransmitResult transmit(double payload_bits, bool head_of_line) {
    if (payload_bits <= tokens_bits_) {
      tokens_bits_ -= payload_bits;
      return TransmitResult::sent;
    }
    if (head_of_line && tokens_bits_ > 0 && payload_bits - tokens_bits_ <= capacity_bits_) {
      tokens_bits_ -= payload_bits;
      return TransmitResult::sent_overshoot;
    }
    return TransmitResult::deferred;
  }

  double tokens_bits() const { return tokens_bits_; }
  double capacity_bits() const { return capacity_bits_; }

 private:
  double capacity_bits_;
  double tokens_bits_;
};

struct SimResult {
  MetricsSeries series;
  // Per-second adaptation series, one per uplink channel id.
  std::map<std::string, std::vector<ChannelSecond>> channel_seconds;
  bool fully_drained = true;
};

namespace simdetail {

// Encoded payloads stream through the bucket in segments so a large batch
// cannot blow the per-second cap; a batch is delivered when its last
// segment clears.
inline constexpr double kSegmentBits = 131072;  // 16 KiB

struct ComponentRt {
  const ComponentDecl* decl = nullptr;
  std::string site_id;
  double speed_factor = 1.0;
  double true_cpu_per_msg = 0.0;
  std::deque<Record> queue;
  std::uint64_t cum_in = 0;
  std::uint64_t cum_out = 0;
  std::vector<std::size_t> out_channels;
  // Shadow replica, when present.
  bool has_shadow = false;
  std::string shadow_site;
  double shadow_speed_factor = 1.0;
};

struct InFlight {
  std::int64_t deliver_tick = 0;
  CodecId codec;
  Batch batch;
};

struct ChannelRt {
  const Channel* ch = nullptr;
  const LinkSpec* link = nullptr;  // uplinks only
  std::string dest_id;
  bool dest_is_sink = false;
  bool dest_is_component = false;
  std::unique_ptr<ChannelController> controller;  // uplinks only
  std::unique_ptr<TokenBucket> bucket;
  double budget_remaining_bits = 0.0;
  CodecId last_cut_codec{CodecBase::json, false};
  std::deque<InFlight> in_flight;
  double interval_codec_cpu = 0.0;  // this channel's share of the edge site
};

}  // namespace simdetail

class SimEngine {
 public:
  SimEngine(const PhysicalPlan& plan, RecordStream& workload, const SimConfig& config)
      : plan_(plan), workload_(&workload), config_(config) {
    if (config_.tick_ms <= 0) throw ConfigError("tick_ms must be positive");
    if (config_.control_interval_ms <= 0 ||
        config_.control_interval_ms % config_.tick_ms != 0)
      throw ConfigError("control_interval_ms must be a positive multiple of tick_ms");
    if (config_.duration_s <= 0) throw ConfigError("duration_s must be positive");
    if (config_.metrics_window_s <= 0) throw ConfigError("metrics_window_s must be positive");
    build();
  }

  // Drives the full run including the trailing drain and returns everything
  // observed. The engine is single-use.
  SimResult run() {
    const std::int64_t total_ticks =
        static_cast<std::int64_t>(std::llround(config_.duration_s * 1000.0)) / config_.tick_ms;
    for (std::int64_t i = 0; i < total_ticks; ++i) step_tick(i, true);

    // Final figure row: state at end of the nominal run.
    for (auto& [id, rows] : result_.channel_seconds) {
      if (!rows.empty()) rows.back().backlog_bytes = backlog_of(id);
    }

    // Drain phase: no new arrivals; leftover pending is cut immediately and
    // everything in flight finishes under the still-enforced caps.
    for (auto& crt : channels_) {
      if (!crt.controller) continue;
      for (Batch& b : crt.controller->flush_cut()) encode_and_enqueue(crt, b, total_ticks);
    }
    const std::int64_t max_flush_ticks =
        total_ticks + static_cast<std::int64_t>(3600.0 * 1000.0 / config_.tick_ms);
    std::int64_t t = total_ticks;
    while (!drained() && t < max_flush_ticks) step_tick(t++, false);
    result_.fully_drained = drained();

    close_window(true);
    result_.series.totals = totals_;
    result_.series.totals.start_s = 0.0;
    result_.series.totals.end_s = static_cast<double>(t) * config_.tick_ms / 1000.0;
    return std::move(result_);
  }

  // Point-in-time copy of the window currently being accumulated, with
  // channel gauges sampled live.
  MetricsWindow snapshot() const {
    MetricsWindow w = window_;
    for (const auto& crt : channels_) {
      if (!crt.controller) continue;
      auto& m = w.channels[crt.ch->id()];
      m.backlog_bytes = static_cast<double>(crt.controller->backlog_bytes());
      m.codec = to_string(crt.controller->current_codec());
      m.batch_window_s = crt.controller->batch_window_s();
    }
    return w;
  }

  void step_until(double t_seconds) {
    std::int64_t until = static_cast<std::int64_t>(std::llround(t_seconds * 1000.0)) /
                         config_.tick_ms;
    while (next_tick_ < until) step_tick(next_tick_++, true);
  }

 private:
  // --- setup -----------------------------------------------------------------

  void build() {
    const double interval_s = config_.control_interval_ms / 1000.0;
    topo_order_ = topological_order(plan_.spec);

    for (const auto& c : plan_.spec.components) {
      simdetail::ComponentRt rt;
      rt.decl = &c;
      rt.site_id = plan_.placement.component_sites.at(c.id);
      rt.speed_factor = plan_.topology.find_site(rt.site_id)->speed_factor;
      auto ov = config_.cpu_true_overrides.find(c.id);
      rt.true_cpu_per_msg = ov != config_.cpu_true_overrides.end() ? ov->second
                                                                   : c.cpu_units_per_msg;
      components_[c.id] = std::move(rt);
    }
    for (const auto& sh : plan_.shadows) {
      auto& rt = components_.at(sh.component);
      rt.has_shadow = true;
      rt.shadow_site = sh.site_id;
      rt.shadow_speed_factor = plan_.topology.find_site(sh.site_id)->speed_factor;
    }

    channels_.reserve(plan_.channels.size());
    for (const auto& ch : plan_.channels) {
      simdetail::ChannelRt crt;
      crt.ch = &ch;
      crt.dest_id = ch.edge.second;
      crt.dest_is_sink = plan_.spec.find_sink(crt.dest_id) != nullptr;
      crt.dest_is_component = components_.count(crt.dest_id) > 0;
      if (ch.kind == ChannelKind::uplink) {
        crt.link = plan_.topology.find_link(ch.from_site, ch.to_site);
        crt.controller = std::make_unique<ChannelController>(
            ch.edge.first, crt.link->per_gb_cost, codec_cpu_, interval_s);
        double cap0 = bandwidth_at(*crt.link, 0.0);
        crt.bucket = std::make_unique<TokenBucket>(2.0 * cap0, 2.0 * cap0);
        result_.channel_seconds[ch.id()] = {};
      }
      channels_.push_back(std::move(crt));
    }
    for (std::size_t i = 0; i < plan_.channels.size(); ++i) {
      const auto& from = plan_.channels[i].edge.first;
      if (auto it = components_.find(from); it != components_.end())
        it->second.out_channels.push_back(i);
      source_channels_[from].push_back(i);
    }

    for (const auto& site : plan_.topology.sites) {
      double mem = plan_.static_mem_at(site.id);
      site_mem_util_[site.id] =
          site.mem_mb > 0 ? std::min(1.0, mem / site.mem_mb) : (mem > 0 ? 1.0 : 0.0);
    }

    window_.start_s = 0.0;
    window_.end_s = config_.metrics_window_s;
    init_window_entities(window_);
    init_window_entities(totals_);
    pull_next_record();
  }

  void init_window_entities(MetricsWindow& w) {
    for (const auto& s : plan_.spec.sources) w.components[s.id];
    for (const auto& c : plan_.spec.components) {
      w.components[c.id].mem_mb = c.mem_mb;
    }
    for (const auto& k : plan_.spec.sinks) w.components[k.id];
    for (const auto& cc : plan_.injected) w.components[cc.id];
    for (const auto& sh : plan_.shadows)
      w.components["shadow:" + sh.component].mem_mb =
          plan_.spec.find_component(sh.component)->mem_mb;
    for (const auto& ch : plan_.channels)
      if (ch.kind == ChannelKind::uplink) {
        auto& m = w.channels[ch.id()];
        m.codec = to_string(CodecId{CodecBase::json, false});
        m.batch_window_s = kBatchWindowLadder[0];
      }
    for (const auto& s : plan_.topology.sites) {
      w.sites[s.id].mem_utilization = site_mem_util_.count(s.id) ? site_mem_util_[s.id] : 0.0;
    }
  }

  // --- per-tick driver ---------------------------------------------------------

  void step_tick(std::int64_t tick_index, bool inject) {
    const std::int64_t now_ms = tick_index * config_.tick_ms;
    const double now_s = static_cast<double>(now_ms) / 1000.0;
    const double tick_s = config_.tick_ms / 1000.0;

    deliver_arrivals(tick_index);

    if (now_ms % config_.control_interval_ms == 0) control_tick(now_ms, now_s);

    if (inject) inject_due_records(now_ms);

    process_components(tick_s);

    transmit_channels(tick_index, now_s, tick_s);

    // Figure rows: the backlog reported for second k is sampled after the
    // boundary tick of second k+1 has cut and sent, so a steady channel
    // reads zero.
    if (now_ms % 1000 == 0 && now_ms > 0) {
      std::int64_t prev_sec = now_ms / 1000 - 1;
      for (auto& crt : channels_) {
        if (!crt.controller) continue;
        auto& rows = result_.channel_seconds[crt.ch->id()];
        if (prev_sec < static_cast<std::int64_t>(rows.size()))
          rows[prev_sec].backlog_bytes = static_cast<double>(crt.controller->backlog_bytes());
      }
    }

    accrue_window(now_ms, tick_s);
  }

  // --- stages -------------------------------------------------------------------

  void deliver_arrivals(std::int64_t tick_index) {
    for (auto& crt : channels_) {
      while (!crt.in_flight.empty() && crt.in_flight.front().deliver_tick <= tick_index) {
        CodecId codec = crt.in_flight.front().codec;
        Batch b = std::move(crt.in_flight.front().batch);
        crt.in_flight.pop_front();
        double n = static_cast<double>(b.records.size());
        const Site* to_site = plan_.topology.find_site(crt.ch->to_site);
        double cpu = codec_cpu_.decode_cost(codec) / to_site->speed_factor * n;
        meter(crt.ch->decoder_id).msgs_in += n;
        meter(crt.ch->decoder_id).msgs_out += n;
        meter(crt.ch->decoder_id).cpu_units_used += cpu;
        totals_.components[crt.ch->decoder_id].msgs_in += n;
        totals_.components[crt.ch->decoder_id].msgs_out += n;
        totals_.components[crt.ch->decoder_id].cpu_units_used += cpu;
        site_cpu_window_[crt.ch->to_site] += cpu;
        site_cpu_interval_[crt.ch->to_site] += cpu;
        crt.interval_codec_cpu += cpu;
        for (Record& r : b.records) route_record(crt, std::move(r), true);
      }
    }
  }

  void control_tick(std::int64_t now_ms, double now_s) {
    // Headroom snapshot first, from the interval that just ended; a channel's
    // own codec work is excluded so its current codec never crowds itself out.
    const double interval_s = config_.control_interval_ms / 1000.0;
    std::map<std::string, double> site_rate;
    for (const auto& [site, cpu] : site_cpu_interval_) site_rate[site] = cpu / interval_s;

    for (auto& crt : channels_) {
      if (!crt.controller) continue;
      double cap = bandwidth_at(*crt.link, now_s);

      auto side_headroom = [&](const std::string& site_id, double cost_factor) {
        const Site* site = plan_.topology.find_site(site_id);
        if (site->site_type == SiteType::cloud)
          return std::numeric_limits<double>::infinity();
        double own = crt.interval_codec_cpu / interval_s;
        double used = std::max(0.0, site_rate[site_id] - own);
        double room = std::max(0.0, site->cpu_units - used) * site->speed_factor;
        return room / cost_factor;
      };
      double headroom = std::min(side_headroom(crt.ch->from_site, 1.0),
                                 side_headroom(crt.ch->to_site, codec_cpu_.decoder_factor));

      ControlDecision d = crt.controller->tick(cap, headroom);
      crt.budget_remaining_bits = d.send_budget_bits;
      crt.last_cut_codec = d.codec;

      std::int64_t sec = now_ms / 1000;
      auto& rows = result_.channel_seconds[crt.ch->id()];
      if (sec < static_cast<std::int64_t>(std::llround(config_.duration_s))) {
        rows.resize(sec + 1);
        rows[sec].t_s = static_cast<std::uint64_t>(sec);
        rows[sec].cap_bits_s = cap;
        rows[sec].codec = to_string(d.codec);
        rows[sec].batch_window_s = d.batch_window_s;
      }

      for (Batch& b : crt.controller->cut_batches(static_cast<std::uint64_t>(now_ms)))
        encode_and_enqueue(crt, b, now_ms / config_.tick_ms);
    }
    site_cpu_interval_.clear();
    for (auto& crt : channels_) crt.interval_codec_cpu = 0.0;
  }

  void encode_and_enqueue(simdetail::ChannelRt& crt, Batch& batch, std::int64_t now_tick) {
    if (batch.records.empty()) return;
    EncodedBatch enc = encode(crt.last_cut_codec, batch);
    crt.controller->observe_encoding(enc.codec, enc.raw_bytes, enc.payload.size());
    double n = static_cast<double>(batch.records.size());
    meter(crt.ch->encoder_id).msgs_out += n;
    totals_.components[crt.ch->encoder_id].msgs_out += n;
    crt.controller->enqueue(std::move(enc),
                            static_cast<std::uint64_t>(now_tick * config_.tick_ms));
  }

  void inject_due_records(std::int64_t now_ms) {
    const std::uint64_t horizon =
        static_cast<std::uint64_t>(now_ms + config_.tick_ms);
    while (next_record_ && next_record_->record.timestamp_ms < horizon) {
      SourcedRecord sr = std::move(*next_record_);
      pull_next_record();
      meter(sr.source_id).msgs_out += 1;
      totals_.components[sr.source_id].msgs_out += 1;
      auto it = source_channels_.find(sr.source_id);
      if (it != source_channels_.end()) {
        for (std::size_t idx : it->second) {
          Record copy = sr.record;
          route_record(channels_[idx], std::move(copy), false);
        }
      }
    }
  }

  // Routes one record into a channel: local channels hand it to the
  // destination directly; uplinks stage it at the encoder.
  void route_record(simdetail::ChannelRt& crt, Record&& r, bool from_uplink_delivery) {
    if (crt.ch->kind == ChannelKind::uplink && !from_uplink_delivery) {
      std::uint64_t canon = wire::canonical_json_size(r);
      const Site* from_site = plan_.topology.find_site(crt.ch->from_site);
      double cpu = codec_cpu_.encode_cost(crt.controller->current_codec()) /
                   from_site->speed_factor;
      meter(crt.ch->encoder_id).msgs_in += 1;
      meter(crt.ch->encoder_id).cpu_units_used += cpu;
      totals_.components[crt.ch->encoder_id].msgs_in += 1;
      totals_.components[crt.ch->encoder_id].cpu_units_used += cpu;
      site_cpu_window_[crt.ch->from_site] += cpu;
      site_cpu_interval_[crt.ch->from_site] += cpu;
      crt.interval_codec_cpu += cpu;
      auto& chan_w = window_.channels[crt.ch->id()];
      auto& chan_t = totals_.channels[crt.ch->id()];
      chan_w.bytes_offered_raw += static_cast<double>(canon);
      chan_t.bytes_offered_raw += static_cast<double>(canon);
      crt.controller->add_arrival(r, canon);
      return;
    }
    if (crt.dest_is_component) {
      components_.at(crt.dest_id).queue.push_back(std::move(r));
    } else if (crt.dest_is_sink) {
      double bytes = static_cast<double>(wire::canonical_json_size(r));
      meter(crt.dest_id).msgs_in += 1;
      meter(crt.dest_id).bytes_in += bytes;
      totals_.components[crt.dest_id].msgs_in += 1;
      totals_.components[crt.dest_id].bytes_in += bytes;
    }
  }

  void process_components(double tick_s) {
    std::map<std::string, double> budget;
    for (const auto& site : plan_.topology.sites) budget[site.id] = site.cpu_units * tick_s;

    for (const auto& id : topo_order_) {
      auto cit = components_.find(id);
      if (cit == components_.end()) continue;
      auto& rt = cit->second;
      double per_msg = rt.true_cpu_per_msg / rt.speed_factor;
      double& site_budget = budget[rt.site_id];

      std::size_t n;
      if (per_msg <= 0) {
        n = rt.queue.size();
      } else {
        n = std::min<std::size_t>(
            rt.queue.size(),
            static_cast<std::size_t>(std::floor(site_budget / per_msg + 1e-9)));
      }
      if (n == 0) continue;

      double used = static_cast<double>(n) * per_msg;
      site_budget -= used;
      site_cpu_window_[rt.site_id] += used;
      site_cpu_interval_[rt.site_id] += used;
      auto& m = meter(id);
      m.msgs_in += static_cast<double>(n);
      m.cpu_units_used += used;
      totals_.components[id].msgs_in += static_cast<double>(n);
      totals_.components[id].cpu_units_used += used;

      if (rt.has_shadow) {
        // Shadows are metered probes: they consume (and report) CPU at their
        // site but do not queue behind its budget or emit downstream.
        double shadow_used =
            static_cast<double>(n) * rt.true_cpu_per_msg / rt.shadow_speed_factor;
        std::string sid = "shadow:" + id;
        meter(sid).msgs_in += static_cast<double>(n);
        meter(sid).cpu_units_used += shadow_used;
        totals_.components[sid].msgs_in += static_cast<double>(n);
        totals_.components[sid].cpu_units_used += shadow_used;
        site_cpu_window_[rt.shadow_site] += shadow_used;
        site_cpu_interval_[rt.shadow_site] += shadow_used;
      }

      double sel = rt.decl->selectivity;
      for (std::size_t i = 0; i < n; ++i) {
        Record r = std::move(rt.queue.front());
        rt.queue.pop_front();
        ++rt.cum_in;
        // Deterministic fractional rounding keeps the long-run output rate at
        // exactly selectivity * input rate with integer emissions.
        std::uint64_t target = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(rt.cum_in) * sel));
        while (rt.cum_out < target) {
          ++rt.cum_out;
          m.msgs_out += 1;
          totals_.components[id].msgs_out += 1;
          for (std::size_t ci : rt.out_channels) {
            Record copy = r;
            route_record(channels_[ci], std::move(copy), false);
          }
        }
      }
    }
  }

  void transmit_channels(std::int64_t tick_index, double now_s, double tick_s) {
    for (auto& crt : channels_) {
      if (!crt.controller) continue;
      double cap = bandwidth_at(*crt.link, now_s);
      crt.bucket->set_capacity(2.0 * cap);
      crt.bucket->refill(cap * tick_s);

      auto& chan_w = window_.channels[crt.ch->id()];
      auto& chan_t = totals_.channels[crt.ch->id()];
      auto& rows = result_.channel_seconds[crt.ch->id()];
      std::int64_t sec = tick_index * config_.tick_ms / 1000;

      while (!crt.controller->queue_empty() && crt.budget_remaining_bits >= 1.0) {
        std::uint64_t chunk = std::min<std::uint64_t>(
            {crt.controller->head_remaining_bits(),
             static_cast<std::uint64_t>(simdetail::kSegmentBits),
             static_cast<std::uint64_t>(std::floor(crt.budget_remaining_bits))});
        TransmitResult res = crt.bucket->transmit(static_cast<double>(chunk), true);
        if (res == TransmitResult::deferred) break;
        crt.budget_remaining_bits -= static_cast<double>(chunk);
        chan_w.bytes_sent_encoded += static_cast<double>(chunk) / 8.0;
        chan_t.bytes_sent_encoded += static_cast<double>(chunk) / 8.0;
        if (sec < static_cast<std::int64_t>(rows.size()))
          rows[sec].sent_bits_s += static_cast<double>(chunk);
        auto done = crt.controller->consume_head(chunk);
        if (done) {
          std::int64_t latency_ticks = crt.link->latency_ms > 0
              ? (static_cast<std::int64_t>(std::llround(crt.link->latency_ms)) +
                 config_.tick_ms - 1) / config_.tick_ms
              : 0;
          Batch decoded = decode(done->codec, done->payload, crt.ch->edge.first);
          crt.in_flight.push_back(
              {tick_index + 1 + latency_ticks, done->codec, std::move(decoded)});
        }
      }
    }
  }

  void accrue_window(std::int64_t now_ms, double tick_s) {
    (void)tick_s;
    const std::int64_t window_ms =
        static_cast<std::int64_t>(std::llround(config_.metrics_window_s * 1000.0));
    if ((now_ms + config_.tick_ms) % window_ms == 0) close_window(false);
  }

  void close_window(bool final_partial) {
    // Gauges sampled at window end.
    for (const auto& ch : plan_.channels) {
      if (ch.kind != ChannelKind::uplink) continue;
      const auto* crt = channel_rt(ch.id());
      auto& m = window_.channels[ch.id()];
      m.backlog_bytes = static_cast<double>(crt->controller->backlog_bytes());
      m.codec = to_string(crt->controller->current_codec());
      m.batch_window_s = crt->controller->batch_window_s();
      auto& t = totals_.channels[ch.id()];
      t.backlog_bytes = m.backlog_bytes;
      t.codec = m.codec;
      t.batch_window_s = m.batch_window_s;
    }
    double window_s = window_.end_s - window_.start_s;
    for (const auto& site : plan_.topology.sites) {
      double used = site_cpu_window_[site.id];
      double util = window_s > 0 ? used / (site.cpu_units * window_s) : 0.0;
      window_.sites[site.id].cpu_utilization = std::min(1.0, std::max(0.0, util));
      window_.sites[site.id].mem_utilization = site_mem_util_[site.id];
    }
    if (final_partial && window_is_empty()) return;
    result_.series.windows.push_back(window_);

    MetricsWindow next;
    next.start_s = window_.end_s;
    next.end_s = window_.end_s + config_.metrics_window_s;
    init_window_entities(next);
    window_ = std::move(next);
    site_cpu_window_.clear();
  }

  bool window_is_empty() const {
    for (const auto& [id, m] : window_.components)
      if (m.msgs_in > 0 || m.msgs_out > 0 || m.cpu_units_used > 0) return false;
    for (const auto& [id, m] : window_.channels)
      if (m.bytes_offered_raw > 0 || m.bytes_sent_encoded > 0 || m.backlog_bytes > 0)
        return false;
    return true;
  }

  bool drained() const {
    if (next_record_) return false;
    for (const auto& [id, rt] : components_)
      if (!rt.queue.empty()) return false;
    for (const auto& crt : channels_) {
      if (!crt.in_flight.empty()) return false;
      if (crt.controller &&
          (crt.controller->pending_count() > 0 || !crt.controller->queue_empty()))
        return false;
    }
    return true;
  }

  double backlog_of(const std::string& channel_id) const {
    const auto* crt = channel_rt(channel_id);
    return crt && crt->controller ? static_cast<double>(crt->controller->backlog_bytes()) : 0.0;
  }

  const simdetail::ChannelRt* channel_rt(const std::string& id) const {
    for (const auto& crt : channels_)
      if (crt.ch->id() == id) return &crt;
    return nullptr;
  }

  ComponentMetrics& meter(const std::string& id) { return window_.components[id]; }

  void pull_next_record() {
    next_record_ = workload_->next();
    if (next_record_ &&
        next_record_->record.timestamp_ms >=
            static_cast<std::uint64_t>(std::llround(config_.duration_s * 1000.0)))
      next_record_.reset();
  }

  PhysicalPlan plan_;
  RecordStream* workload_;
  SimConfig config_;
  CodecCpuTable codec_cpu_;

  std::vector<std::string> topo_order_;
  std::map<std::string, simdetail::ComponentRt> components_;
  std::vector<simdetail::ChannelRt> channels_;
  std::map<std::string, std::vector<std::size_t>> source_channels_;

  std::optional<SourcedRecord> next_record_;
  std::int64_t next_tick_ = 0;

  MetricsWindow window_;
  MetricsWindow totals_;
  std::map<std::string, double> site_cpu_window_;
  std::map<std::string, double> site_cpu_interval_;
  std::map<std::string, double> site_mem_util_;

  SimResult result_;
};

inline SimResult run_simulation(const PhysicalPlan& plan, RecordStream& workload,
                                const SimConfig& config) {
  SimEngine engine(plan, workload, config);
  return engine.run();
}

}  // namespace edgeflow
