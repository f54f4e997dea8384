#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "edgeflow/codecs.hpp"
#include "edgeflow/workload.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Per-uplink communication controller. Every control interval it re-picks a
// codec and batch window against the observed bandwidth cap, keeps EWMA
// estimates of per-codec compression ratios, and owns the channel backlog
// (pending raw records plus encoded batches waiting for tokens).
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 6> kBatchWindowLadder = {1, 2, 5, 10, 30, 60};

struct ControlDecision {
  CodecId codec;
  double batch_window_s = 1.0;
  double send_budget_bits = 0.0;  // for the coming control interval
  bool drain = false;
  double observed_cap_bits = 0.0;
  bool escalated = false;  // no codec fit under the cap this interval
};

struct QueuedBatch {
  EncodedBatch batch;
  std::uint64_t remaining_bits = 0;
  std::uint64_t cut_at_ms = 0;
};

class ChannelController {
 public:
  ChannelController(std::string producer_id, double per_gb_cost, CodecCpuTable codec_cpu,
                    double interval_s, double ewma_alpha = 0.3)
      : producer_id_(std::move(producer_id)),
        per_gb_cost_(per_gb_cost),
        codec_cpu_(codec_cpu),
        interval_s_(interval_s),
        ewma_alpha_(ewma_alpha) {
    // Bootstrap priors; each is replaced outright by the first observation.
    for (CodecId c : all_codecs()) {
      double base = c.base == CodecBase::json      ? 1.0
                    : c.base == CodecBase::binpack ? 0.45
                                                   : 0.30;
      ratio_estimates_[c.index()] = c.deflate ? base * 0.6 : base;
      is_prior_[c.index()] = true;
    }
  }

  // --- arrivals -------------------------------------------------------------

  void add_arrival(const Record& r, std::uint64_t canonical_bytes) {
    pending_.push_back({r, canonical_bytes});
    pending_raw_bytes_ += canonical_bytes;
    arrived_count_ += 1;
    arrived_raw_bits_ += canonical_bytes * 8.0;
  }

  // --- control tick ----------------------------------------------------------

  ControlDecision tick(double observed_cap_bits, double edge_cpu_headroom) {
    const double required_raw_bits_s = arrived_raw_bits_ / interval_s_;
    const double msgs_per_s = static_cast<double>(arrived_count_) / interval_s_;
    arrived_raw_bits_ = 0;
    arrived_count_ = 0;
    last_observed_cap_ = observed_cap_bits;

    ControlDecision d;
    d.observed_cap_bits = observed_cap_bits;

    // Candidate codecs must fit the cap at their estimated encoded rate and
    // fit the edge-side CPU headroom at the current message rate.
    std::optional<CodecId> best;
    double best_cost = std::numeric_limits<double>::infinity();
    double best_cpu = std::numeric_limits<double>::infinity();
    std::optional<CodecId> best_ratio_cpu_ok;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (CodecId c : all_codecs()) {
      double est_rate = required_raw_bits_s * ratio_estimates_[c.index()];
      double enc_cpu = codec_cpu_.encode_cost(c) * msgs_per_s;
      if (enc_cpu > edge_cpu_headroom) continue;
      if (ratio_estimates_[c.index()] < best_ratio) {
        best_ratio = ratio_estimates_[c.index()];
        best_ratio_cpu_ok = c;
      }
      if (est_rate > observed_cap_bits) continue;
      double dollar_rate = est_rate * per_gb_cost_;  // per-bit scaling is uniform
      if (dollar_rate < best_cost || (dollar_rate == best_cost && enc_cpu < best_cpu)) {
        best = c;
        best_cost = dollar_rate;
        best_cpu = enc_cpu;
      }
    }

    if (best) {
      current_codec_ = *best;
      comfort_ = (queued_encoded_bytes_ == 0 &&
                  observed_cap_bits >=
                      2.0 * required_raw_bits_s * ratio_estimates_[best->index()])
                     ? comfort_ + 1
                     : 0;
      if (comfort_ >= 2 && window_idx_ > 0) {
        --window_idx_;
        comfort_ = 0;
      }
    } else {
      // Nothing fits under the cap: fall back to the densest CPU-feasible
      // codec (or the cheapest-CPU one if even CPU is short) and batch
      // harder; the shortfall accumulates as backlog.
      current_codec_ = best_ratio_cpu_ok ? *best_ratio_cpu_ok : CodecId{CodecBase::json, false};
      if (window_idx_ + 1 < static_cast<int>(kBatchWindowLadder.size())) ++window_idx_;
      d.escalated = true;
      comfort_ = 0;
    }

    double est_rate = required_raw_bits_s * ratio_estimates_[current_codec_.index()];
    if (queued_encoded_bytes_ > 0 && observed_cap_bits > est_rate) {
      d.drain = true;
      d.send_budget_bits = observed_cap_bits * interval_s_;
    } else {
      // Steady budget plus a one-second burst allowance from the bucket.
      d.send_budget_bits =
          (std::min(observed_cap_bits, est_rate) + observed_cap_bits) * interval_s_;
    }
    d.codec = current_codec_;
    d.batch_window_s = kBatchWindowLadder[static_cast<std::size_t>(window_idx_)];
    return d;
  }

  void observe_encoding(CodecId codec, std::uint64_t raw_bytes, std::uint64_t encoded_bytes) {
    if (raw_bytes == 0) return;
    double observed = static_cast<double>(encoded_bytes) / static_cast<double>(raw_bytes);
    int i = codec.index();
    if (is_prior_[i]) {
      ratio_estimates_[i] = observed;
      is_prior_[i] = false;
    } else {
      ratio_estimates_[i] = (1.0 - ewma_alpha_) * ratio_estimates_[i] + ewma_alpha_ * observed;
    }
  }

  // --- batch cutting ----------------------------------------------------------

  // Cuts pending records older than the current window into one batch per
  // elapsed window, boundaries aligned to multiples of the window. Records
  // are never split or reordered.
  std::vector<Batch> cut_batches(std::uint64_t now_ms) {
    std::uint64_t window_ms =
        static_cast<std::uint64_t>(kBatchWindowLadder[static_cast<std::size_t>(window_idx_)] *
                                   1000.0);
    std::uint64_t boundary_ms = now_ms / window_ms * window_ms;
    std::vector<Batch> out;
    while (!pending_.empty() && pending_.front().record.timestamp_ms < boundary_ms) {
      std::uint64_t group = pending_.front().record.timestamp_ms / window_ms;
      Batch b;
      b.source_id = producer_id_;
      while (!pending_.empty() && pending_.front().record.timestamp_ms < boundary_ms &&
             pending_.front().record.timestamp_ms / window_ms == group) {
        pending_raw_bytes_ -= pending_.front().canonical_bytes;
        b.records.push_back(std::move(pending_.front().record));
        pending_.pop_front();
      }
      out.push_back(std::move(b));
    }
    return out;
  }

  // End-of-run cut: everything left becomes final batches regardless of the
  // window boundary.
  std::vector<Batch> flush_cut() {
    std::vector<Batch> out;
    if (pending_.empty()) return out;
    Batch b;
    b.source_id = producer_id_;
    for (auto& p : pending_) b.records.push_back(std::move(p.record));
    pending_.clear();
    pending_raw_bytes_ = 0;
    out.push_back(std::move(b));
    return out;
  }

  // --- encoded backlog queue ---------------------------------------------------

  void enqueue(EncodedBatch&& batch, std::uint64_t now_ms) {
    std::uint64_t bits = batch.payload.size() * 8;
    queued_encoded_bytes_ += batch.payload.size();
    queue_.push_back({std::move(batch), bits, now_ms});
  }

  bool queue_empty() const { return queue_.empty(); }
  std::uint64_t head_remaining_bits() const { return queue_.front().remaining_bits; }

  // Consumes sent bits from the head batch; returns it once fully sent.
  std::optional<EncodedBatch> consume_head(std::uint64_t bits) {
    QueuedBatch& head = queue_.front();
    head.remaining_bits -= bits;
    if (head.remaining_bits > 0) return std::nullopt;
    queued_encoded_bytes_ -= head.batch.payload.size();
    EncodedBatch done = std::move(head.batch);
    queue_.pop_front();
    return done;
  }

  // --- inspection ----------------------------------------------------------------

  std::uint64_t backlog_bytes() const { return queued_encoded_bytes_ + pending_raw_bytes_; }
  std::uint64_t queued_encoded_bytes() const { return queued_encoded_bytes_; }
  std::uint64_t pending_raw_bytes() const { return pending_raw_bytes_; }
  std::size_t pending_count() const { return pending_.size(); }
  CodecId current_codec() const { return current_codec_; }
  double batch_window_s() const {
    return kBatchWindowLadder[static_cast<std::size_t>(window_idx_)];
  }
  double ratio_estimate(CodecId c) const { return ratio_estimates_[c.index()]; }
  bool estimate_is_prior(CodecId c) const { return is_prior_[c.index()]; }
  double last_observed_cap() const { return last_observed_cap_; }
  const std::string& producer_id() const { return producer_id_; }

 private:
  struct PendingRecord {
    Record record;
    std::uint64_t canonical_bytes;
  };

  std::string producer_id_;
  double per_gb_cost_;
  CodecCpuTable codec_cpu_;
  double interval_s_;
  double ewma_alpha_;

  std::array<double, 6> ratio_estimates_{};
  std::array<bool, 6> is_prior_{};
  CodecId current_codec_{CodecBase::json, false};
  int window_idx_ = 0;
  int comfort_ = 0;
  double last_observed_cap_ = 0.0;

  std::deque<PendingRecord> pending_;
  std::uint64_t pending_raw_bytes_ = 0;
  std::deque<QueuedBatch> queue_;
  std::uint64_t queued_encoded_bytes_ = 0;

  double arrived_raw_bits_ = 0.0;
  std::uint64_t arrived_count_ = 0;
};

}  // namespace edgeflow
