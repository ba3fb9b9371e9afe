#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rtbench/sample.hpp"
#include "rtbench/time.hpp"

namespace rtbench {

// Periods without a reply before a pending sample is finalized as lost.
inline constexpr std::uint64_t kDefaultLossHorizonPeriods = 4;

// Owns the per-cycle sample records and classifies replies against them.
// All storage is preallocated in the constructor; on_send/on_reply/advance
// never allocate, so they are safe inside the real-time send loop.
//
// Lifecycle of one sample: pending -> (ok | late_arrival) on reply, or
// pending -> (lost | send_overrun) once the loss horizon expires. A reply
// landing after that finalization still reclassifies the sample to
// late_arrival while the record is within the retention window
// (2 x horizon from send); later replies only bump the stale counter.
class ReplyMatcher {
 public:
  struct Config {
    std::uint64_t period_ns = kNanosPerMilli;
    std::uint64_t deadline_ns = kNanosPerMilli;
    std::uint64_t loss_horizon_periods = kDefaultLossHorizonPeriods;
  };

  enum class ReplyOutcome {
    matched_ok,         // pending sample, rtt within deadline
    matched_late,       // pending sample, rtt over deadline
    reclassified_late,  // sample was already finalized lost, reply in retention
    duplicate,          // sample already carries a reply
    stale,              // reply beyond retention, or sequence never sent
  };

  ReplyMatcher(std::size_t cycle_count, Config cfg);

  // Registers the probe send for cycle `sequence`. Sequences must be
  // registered in increasing order starting at 0.
  void on_send(std::uint64_t sequence, Timestamp t_send, bool overrun);

  ReplyOutcome on_reply(std::uint64_t sequence, Timestamp t_recv);

  // Finalizes every pending sample whose loss horizon has passed by `now`.
  void advance(Timestamp now);

  // Finalizes all remaining pending samples regardless of horizon.
  void finalize();

  const std::vector<RoundTripSample>& samples() const { return samples_; }
  std::uint64_t duplicates() const { return duplicates_; }
  std::uint64_t stale_replies() const { return stale_replies_; }
  std::uint64_t sends_registered() const { return next_send_; }

 private:
  void finalize_sample(RoundTripSample& s);

  Config cfg_;
  std::uint64_t horizon_ns_;
  std::uint64_t retention_ns_;
  std::vector<RoundTripSample> samples_;
  std::uint64_t next_send_ = 0;     // next sequence expected by on_send
  std::uint64_t finalize_from_ = 0; // lowest index that may still be pending
  std::uint64_t duplicates_ = 0;
  std::uint64_t stale_replies_ = 0;
};

}  // namespace rtbench
