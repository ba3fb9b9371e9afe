#include "rtbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rtbench {

const char* to_string(SampleStatus s) {
  switch (s) {
    case SampleStatus::pending: return "pending";
    case SampleStatus::ok: return "ok";
    case SampleStatus::lost: return "lost";
    case SampleStatus::late_arrival: return "late_arrival";
    case SampleStatus::send_overrun: return "send_overrun";
  }
  return "unknown";
}

std::uint64_t RunSummary::min_rtt_us() const {
  return count_received == 0 ? 0 : ns_to_us_half_up(min_rtt_ns);
}

std::uint64_t RunSummary::max_rtt_us() const {
  return count_received == 0 ? 0 : ns_to_us_half_up(max_rtt_ns);
}

std::uint64_t RunSummary::avg_rtt_us() const {
  if (count_received == 0) return 0;
  // round_half_up(sum / (1000 * n)) without leaving integer arithmetic:
  // floor((2*sum + 1000*n) / (2000*n)).
  const std::uint64_t n = count_received;
  return (2 * rtt_sum_ns + 1000 * n) / (2000 * n);
}

LatencyHistogram::LatencyHistogram(std::uint64_t bin_width_ns,
                                   std::uint64_t overflow_threshold_ns)
    : bin_width_ns_(bin_width_ns), overflow_threshold_ns_(overflow_threshold_ns) {
  if (bin_width_ns_ == 0) throw std::invalid_argument("histogram bin width must be > 0");
  if (overflow_threshold_ns_ < bin_width_ns_) {
    throw std::invalid_argument("histogram overflow threshold below bin width");
  }
  bins_.resize((overflow_threshold_ns_ + bin_width_ns_ - 1) / bin_width_ns_, 0);
}

void LatencyHistogram::add(std::uint64_t rtt_ns) {
  if (rtt_ns >= overflow_threshold_ns_) {
    ++overflow_count_;
  } else {
    ++bins_[rtt_ns / bin_width_ns_];
  }
  ++total_;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> LatencyHistogram::nonempty_bins() const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i] != 0) out.emplace_back(i, bins_[i]);
  }
  return out;
}

void LatencyHistogram::set_bin(std::uint64_t index, std::uint64_t count) {
  if (index >= bins_.size()) throw std::out_of_range("histogram bin index out of range");
  total_ += count - bins_[index];
  bins_[index] = count;
}

void LatencyHistogram::set_overflow_count(std::uint64_t count) {
  total_ += count - overflow_count_;
  overflow_count_ = count;
}

void TimeSeries::append(std::uint64_t cycle_index, std::uint64_t rtt_ns) {
  if (!points_.empty() && points_.back().first >= cycle_index) {
    throw std::invalid_argument("time series indices must be strictly increasing");
  }
  points_.emplace_back(cycle_index, rtt_ns);
}

RunAccumulator::RunAccumulator(std::uint64_t deadline_ns, LatencyHistogram histogram,
                               bool collect_timeseries, std::uint64_t index_offset)
    : deadline_ns_(deadline_ns),
      histogram_(std::move(histogram)),
      collect_timeseries_(collect_timeseries),
      index_offset_(index_offset) {
  if (deadline_ns_ == 0) throw std::invalid_argument("deadline must be > 0");
}

void RunAccumulator::record(const RoundTripSample& sample) {
  ++summary_.count_sent;
  if (sample.overrun) ++summary_.count_send_overrun;
  if (!sample.received()) {
    ++summary_.count_lost;
    return;
  }
  ++summary_.count_received;
  summary_.min_rtt_ns = std::min(summary_.min_rtt_ns, sample.rtt_ns);
  summary_.max_rtt_ns = std::max(summary_.max_rtt_ns, sample.rtt_ns);
  summary_.rtt_sum_ns += sample.rtt_ns;
  if (sample.rtt_ns > deadline_ns_) ++summary_.count_missed_deadline;
  histogram_.add(sample.rtt_ns);
  if (collect_timeseries_) timeseries_.append(sample.sequence - index_offset_, sample.rtt_ns);
}

std::uint64_t percentile(std::span<const std::uint64_t> rtts_ns, double p) {
  if (rtts_ns.empty()) throw std::invalid_argument("percentile of an empty sample set");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile fraction outside [0, 1]");
  std::vector<std::uint64_t> scratch(rtts_ns.begin(), rtts_ns.end());
  const auto n = scratch.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  std::nth_element(scratch.begin(), scratch.begin() + (rank - 1), scratch.end());
  return scratch[rank - 1];
}

}  // namespace rtbench
