#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "edgeflow/errors.hpp"
#include "edgeflow/numfmt.hpp"
#include "edgeflow/rng.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Sensor timeseries: synthetic generators (stand-ins for production traces)
// plus trace replay. Generation is a pure function of the spec and seed.
// ---------------------------------------------------------------------------

struct Record {
  std::uint64_t timestamp_ms = 0;
  std::string sensor_id;
  double value = 0.0;

  bool operator==(const Record&) const = default;
};

struct SourcedRecord {
  std::string source_id;
  Record record;

  bool operator==(const SourcedRecord&) const = default;
};

enum class SensorKind { constant, sine_noise, random_walk };

struct SensorModel {
  SensorKind kind = SensorKind::constant;
  // constant
  double level = 0.0;
  // sine_noise
  double amplitude = 1.0;
  double period_s = 1.0;
  double noise_sd = 0.0;
  // random_walk
  double step_sd = 0.0;
  double start = 0.0;
};

struct SourceWorkload {
  std::string source_id;
  std::uint64_t sensor_count = 1;
  double rate_per_sensor = 1.0;  // messages/second per sensor
  SensorModel model;
  std::string sensor_id_prefix;  // defaults to "<source_id>/"
};

struct WorkloadSpec {
  std::vector<SourceWorkload> sources;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
};

// Pull interface shared by synthetic generation and trace replay; the
// simulator is agnostic to where records come from.
class RecordStream {
 public:
  virtual ~RecordStream() = default;
  virtual std::optional<SourcedRecord> next() = 0;
};

namespace detail {

// Unit-amplitude sine that is exact on the quarter lattice, so a 1 Hz
// sampling of a 4 s period yields 0, 1, 0, -1 without rounding residue.
inline double unit_sine(double cycles) {
  double u = cycles - std::floor(cycles);
  if (u == 0.0 || u == 0.5) return 0.0;
  if (u == 0.25) return 1.0;
  if (u == 0.75) return -1.0;
  return std::sin(2.0 * 3.14159265358979323846 * u);
}

struct SensorState {
  std::string source_id;
  std::string sensor_id;
  const SensorModel* model;
  double rate;
  SplitMix64 rng;
  std::uint64_t emitted = 0;
  double walk_value = 0.0;

  std::uint64_t next_timestamp_ms() const {
    return static_cast<std::uint64_t>(
        std::llround(static_cast<double>(emitted) * 1000.0 / rate));
  }

  double next_value(std::uint64_t ts_ms) {
    switch (model->kind) {
      case SensorKind::constant:
        return model->level;
      case SensorKind::sine_noise: {
        double base =
            model->amplitude *
            unit_sine(static_cast<double>(ts_ms) / 1000.0 / model->period_s);
        if (model->noise_sd > 0) base += model->noise_sd * rng.next_gaussian();
        return base;
      }
      case SensorKind::random_walk: {
        double v = walk_value;
        walk_value += model->step_sd * rng.next_gaussian();
        return v;
      }
    }
    return 0.0;
  }
};

}  // namespace detail

class WorkloadStream : public RecordStream {
 public:
  explicit WorkloadStream(const WorkloadSpec& spec) : spec_(spec) {
    for (const auto& src : spec_.sources) {
      std::string prefix =
          src.sensor_id_prefix.empty() ? src.source_id + "/" : src.sensor_id_prefix;
      for (std::uint64_t i = 0; i < src.sensor_count; ++i) {
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%04llu", static_cast<unsigned long long>(i));
        detail::SensorState st{src.source_id,
                               prefix + idx,
                               &src.model,
                               src.rate_per_sensor,
                               SplitMix64(derive_seed(spec_.seed, src.source_id, i))};
        st.walk_value = src.model.start;
        sensors_.push_back(std::move(st));
      }
    }
    for (std::size_t i = 0; i < sensors_.size(); ++i) push_heap_entry(i);
  }

  std::optional<SourcedRecord> next() override {
    if (heap_.empty()) return std::nullopt;
    HeapEntry top = heap_.top();
    heap_.pop();
    auto& st = sensors_[top.index];
    SourcedRecord out{st.source_id, Record{top.ts_ms, st.sensor_id, st.next_value(top.ts_ms)}};
    ++st.emitted;
    push_heap_entry(top.index);
    return out;
  }

 private:
  struct HeapEntry {
    std::uint64_t ts_ms;
    std::string source_id;
    std::string sensor_id;
    std::size_t index;
    // Min-heap on (timestamp, source_id, sensor_id).
    bool operator>(const HeapEntry& o) const {
      return std::tie(ts_ms, source_id, sensor_id) > std::tie(o.ts_ms, o.source_id, o.sensor_id);
    }
  };

  void push_heap_entry(std::size_t i) {
    auto& st = sensors_[i];
    std::uint64_t ts = st.next_timestamp_ms();
    if (static_cast<double>(ts) >= spec_.duration_s * 1000.0) return;
    heap_.push(HeapEntry{ts, st.source_id, st.sensor_id, i});
  }

  WorkloadSpec spec_;
  std::vector<detail::SensorState> sensors_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap_;
};

inline std::unique_ptr<RecordStream> generate(const WorkloadSpec& spec) {
  return std::make_unique<WorkloadStream>(spec);
}

inline std::vector<SourcedRecord> generate_all(const WorkloadSpec& spec) {
  WorkloadStream stream(spec);
  std::vector<SourcedRecord> out;
  while (auto r = stream.next()) out.push_back(std::move(*r));
  return out;
}

// --- Trace CSV --------------------------------------------------------------
// Header `timestamp_ms,source_id,sensor_id,value`, LF endings, timestamps
// nondecreasing per source.

inline std::string export_trace(const std::vector<SourcedRecord>& records) {
  std::string out = "timestamp_ms,source_id,sensor_id,value\n";
  for (const auto& r : records) {
    out += format_u64(r.record.timestamp_ms);
    out += ',';
    out += r.source_id;
    out += ',';
    out += r.record.sensor_id;
    out += ',';
    out += format_double(r.record.value);
    out += '\n';
  }
  return out;
}

class VectorStream : public RecordStream {
 public:
  explicit VectorStream(std::vector<SourcedRecord> records)
      : records_(std::move(records)) {}
  std::optional<SourcedRecord> next() override {
    if (pos_ >= records_.size()) return std::nullopt;
    return records_[pos_++];
  }

 private:
  std::vector<SourcedRecord> records_;
  std::size_t pos_ = 0;
};

inline std::vector<SourcedRecord> replay(const std::string& trace_text) {
  std::vector<SourcedRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::map<std::string, std::uint64_t> last_ts;
  while (pos < trace_text.size()) {
    std::size_t eol = trace_text.find('\n', pos);
    std::string_view line(trace_text.data() + pos,
                          (eol == std::string::npos ? trace_text.size() : eol) - pos);
    pos = eol == std::string::npos ? trace_text.size() : eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "timestamp_ms,source_id,sensor_id,value")
        throw FormatError("bad trace header", line_no);
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cols.size() != 4) throw FormatError("expected 4 columns", line_no);
    SourcedRecord r;
    if (!try_parse_u64(cols[0], r.record.timestamp_ms))
      throw FormatError("bad timestamp_ms", line_no);
    r.source_id = std::string(cols[1]);
    r.record.sensor_id = std::string(cols[2]);
    if (!try_parse_double(cols[3], r.record.value))
      throw FormatError("bad value", line_no);
    auto it = last_ts.find(r.source_id);
    if (it != last_ts.end() && r.record.timestamp_ms < it->second)
      throw OrderError("timestamps decrease within source " + r.source_id + " at line " +
                       std::to_string(line_no));
    last_ts[r.source_id] = r.record.timestamp_ms;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace edgeflow
