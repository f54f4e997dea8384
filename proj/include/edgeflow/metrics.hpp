#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "edgeflow/errors.hpp"
#include "edgeflow/numfmt.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Observed metrics. Windows are contiguous and non-overlapping; counters are
// per-window increments, gauges are sampled at window end. The CSV layout is
// part of the external contract and must be byte-stable.
// ---------------------------------------------------------------------------

struct ComponentMetrics {
  double msgs_in = 0;
  double msgs_out = 0;
  double cpu_units_used = 0;
  double mem_mb = 0;        // gauge
  double bytes_in = 0;      // raw canonical bytes entering (sinks: storage writes)
};

struct ChannelMetrics {
  double bytes_offered_raw = 0;
  double bytes_sent_encoded = 0;
  double backlog_bytes = 0;  // gauge at window end
  std::string codec;
  double batch_window_s = 0;
};

struct SiteMetrics {
  double cpu_utilization = 0;
  double mem_utilization = 0;
};

struct MetricsWindow {
  double start_s = 0;
  double end_s = 0;
  std::map<std::string, ComponentMetrics> components;
  std::map<std::string, ChannelMetrics> channels;
  std::map<std::string, SiteMetrics> sites;
};

struct MetricsSeries {
  std::vector<MetricsWindow> windows;
  MetricsWindow totals;  // cumulative over the whole run
};

// One second of one uplink channel, for the bandwidth-adaptation series.
struct ChannelSecond {
  std::uint64_t t_s = 0;
  double cap_bits_s = 0;
  double sent_bits_s = 0;
  double backlog_bytes = 0;
  std::string codec;
  double batch_window_s = 0;
};

namespace csvfmt {

inline void append_row(std::string& out, const std::string& prefix, const std::string& kind,
                       const std::string& id, const std::string& metric, double value) {
  out += prefix + ',' + kind + ',' + id + ',' + metric + ',' + format_double(value) + '\n';
}

inline void append_window(std::string& out, const std::string& prefix, const MetricsWindow& w) {
  for (const auto& [id, m] : w.components) {
    append_row(out, prefix, "component", id, "msgs_in", m.msgs_in);
    append_row(out, prefix, "component", id, "msgs_out", m.msgs_out);
    append_row(out, prefix, "component", id, "cpu_units", m.cpu_units_used);
    append_row(out, prefix, "component", id, "mem_mb", m.mem_mb);
    append_row(out, prefix, "component", id, "bytes_in", m.bytes_in);
  }
  for (const auto& [id, m] : w.channels) {
    append_row(out, prefix, "channel", id, "bytes_offered_raw", m.bytes_offered_raw);
    append_row(out, prefix, "channel", id, "bytes_sent_encoded", m.bytes_sent_encoded);
    append_row(out, prefix, "channel", id, "backlog_bytes", m.backlog_bytes);
    out += prefix + ",channel," + id + ",codec," + m.codec + '\n';
    append_row(out, prefix, "channel", id, "batch_window_s", m.batch_window_s);
  }
  for (const auto& [id, m] : w.sites) {
    append_row(out, prefix, "site", id, "cpu_util", m.cpu_utilization);
    append_row(out, prefix, "site", id, "mem_util", m.mem_utilization);
  }
}

}  // namespace csvfmt

inline std::string metrics_to_csv(const MetricsSeries& series) {
  std::string out = "window_start_s,entity_kind,entity_id,metric,value\n";
  for (const auto& w : series.windows) csvfmt::append_window(out, format_double(w.start_s), w);
  csvfmt::append_window(out, "#TOTAL", series.totals);
  return out;
}

inline std::string figure3_to_csv(const std::vector<ChannelSecond>& rows) {
  std::string out = "t_s,cap_bits_s,sent_bits_s,backlog_bytes,codec,batch_window_s\n";
  for (const auto& r : rows) {
    out += format_u64(r.t_s) + ',' + format_double(r.cap_bits_s) + ',' +
           format_double(r.sent_bits_s) + ',' + format_double(r.backlog_bytes) + ',' + r.codec +
           ',' + format_double(r.batch_window_s) + '\n';
  }
  return out;
}

// Reader for the metrics CSV (self-roundtrip contract). Values parse as
// doubles except the codec metric, which is kept as a string.
struct MetricsCsvRow {
  std::string window;  // start second or "#TOTAL"
  std::string entity_kind;
  std::string entity_id;
  std::string metric;
  std::string value;
};

inline std::vector<MetricsCsvRow> parse_metrics_csv(const std::string& text) {
  std::vector<MetricsCsvRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "window_start_s,entity_kind,entity_id,metric,value")
        throw FormatError("bad metrics header", line_no);
      continue;
    }
    MetricsCsvRow row;
    std::string* fields[5] = {&row.window, &row.entity_kind, &row.entity_id, &row.metric,
                              &row.value};
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= 5) throw FormatError("too many columns", line_no);
        *fields[field++] = std::string(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (field != 5) throw FormatError("expected 5 columns", line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace edgeflow
