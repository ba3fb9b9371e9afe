#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "rtbench/sample.hpp"

namespace rtbench {

// Row shape of the result tables: counters plus min/avg/max round-trip time.
// Extrema and the sum are carried in exact nanoseconds; the microsecond
// accessors round half up to match the tables' integer presentation.
struct RunSummary {
  std::uint64_t count_sent = 0;
  std::uint64_t count_received = 0;
  std::uint64_t count_lost = 0;  // includes unreplied send-overrun cycles
  std::uint64_t count_missed_deadline = 0;
  std::uint64_t count_send_overrun = 0;  // cycles whose wake overran the next slot
  std::uint64_t duplicates = 0;
  std::uint64_t stale_replies = 0;
  std::uint64_t min_rtt_ns = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t max_rtt_ns = 0;
  std::uint64_t rtt_sum_ns = 0;  // exact; avg = rtt_sum_ns / count_received

  std::uint64_t min_rtt_us() const;
  std::uint64_t avg_rtt_us() const;
  std::uint64_t max_rtt_us() const;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

// Fixed-bin latency histogram with an overflow bucket. Bins are allocated up
// front; sum(bins) + overflow == number of recorded values at all times.
class LatencyHistogram {
 public:
  static constexpr std::uint64_t kDefaultBinWidthNs = kNanosPerMicro;        // 1 us
  static constexpr std::uint64_t kDefaultOverflowNs = 100 * kNanosPerMilli;  // 100 ms

  explicit LatencyHistogram(std::uint64_t bin_width_ns = kDefaultBinWidthNs,
                            std::uint64_t overflow_threshold_ns = kDefaultOverflowNs);

  void add(std::uint64_t rtt_ns);

  std::uint64_t bin_width_ns() const { return bin_width_ns_; }
  std::uint64_t overflow_threshold_ns() const { return overflow_threshold_ns_; }
  std::size_t bin_count() const { return bins_.size(); }
  std::uint64_t bin(std::size_t index) const { return bins_[index]; }
  std::uint64_t overflow_count() const { return overflow_count_; }
  std::uint64_t total() const { return total_; }

  // (bin index, count) for every nonempty bin, ascending by index.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> nonempty_bins() const;

  void set_bin(std::uint64_t index, std::uint64_t count);  // deserialization
  void set_overflow_count(std::uint64_t count);

  friend bool operator==(const LatencyHistogram&, const LatencyHistogram&) = default;

 private:
  std::uint64_t bin_width_ns_;
  std::uint64_t overflow_threshold_ns_;
  std::vector<std::uint64_t> bins_;
  std::uint64_t overflow_count_ = 0;
  std::uint64_t total_ = 0;
};

// (cycle index, rtt ns) for received samples, indices strictly increasing.
class TimeSeries {
 public:
  void append(std::uint64_t cycle_index, std::uint64_t rtt_ns);
  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& points() const {
    return points_;
  }
  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<std::pair<std::uint64_t, std::uint64_t>> points_;
};

// Streaming fold over finalized samples: counters, extrema, histogram and
// optional time series updated in O(1) per sample.
//
// Miss rule: a sample misses its deadline iff it was received and
// rtt > deadline. Lost samples count in loss only and never enter the
// histogram or extrema, keeping the table columns independent.
class RunAccumulator {
 public:
  // index_offset is subtracted from sample sequences for the time series,
  // so warmup cycles do not shift the plotted cycle index.
  explicit RunAccumulator(std::uint64_t deadline_ns,
                          LatencyHistogram histogram = LatencyHistogram{},
                          bool collect_timeseries = false,
                          std::uint64_t index_offset = 0);

  void record(const RoundTripSample& sample);

  std::uint64_t deadline_ns() const { return deadline_ns_; }
  const RunSummary& summary() const { return summary_; }
  const LatencyHistogram& histogram() const { return histogram_; }
  const TimeSeries& timeseries() const { return timeseries_; }

 private:
  std::uint64_t deadline_ns_;
  RunSummary summary_;
  LatencyHistogram histogram_;
  bool collect_timeseries_;
  std::uint64_t index_offset_;
  TimeSeries timeseries_;
};

// Nearest-rank percentile over round-trip times, p in [0, 1]; p=0 is the
// minimum, p=1 the maximum. Throws std::invalid_argument on an empty set or
// p outside [0, 1].
std::uint64_t percentile(std::span<const std::uint64_t> rtts_ns, double p);

}  // namespace rtbench
