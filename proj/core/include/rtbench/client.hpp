#pragma once

#include <cstdint>
#include <vector>

#include "rtbench/matcher.hpp"
#include "rtbench/probe.hpp"
#include "rtbench/sched.hpp"
#include "rtbench/socket.hpp"
#include "rtbench/stats.hpp"
#include "rtbench/time.hpp"

namespace rtbench {

struct ClientConfig {
  SocketConfig socket;  // peer must be set
  CycleSpec cycles;
  std::uint64_t loss_horizon_periods = kDefaultLossHorizonPeriods;
  std::size_t payload_size = kDefaultPayloadSize;
  bool collect_timeseries = false;

  void validate() const;
};

struct ClientResult {
  Timestamp anchor;                      // t0 of the send schedule
  std::uint32_t warmup_cycles = 0;
  std::vector<RoundTripSample> samples;  // every cycle, warmup included
  RunSummary summary;                    // post-warmup cycles only
  LatencyHistogram histogram;            // post-warmup cycles only
  TimeSeries timeseries;
  std::uint64_t protocol_errors = 0;     // received datagrams that failed decode
  std::uint64_t send_failures = 0;       // probe sends that errored
};

// Runs the full ping-pong schedule against cfg.socket.peer. Each cycle wakes
// at its absolute target, stamps T1, sends probe(seq=n), then services
// replies until the next target. Replies are matched by sequence, so
// reordered or late datagrams land on their own sample. After the last cycle
// the loop keeps draining for one loss horizon before finalizing.
//
// The send/receive loop performs no dynamic allocation; sample storage and
// both packet buffers are preallocated up front.
ClientResult run_client(const ClientConfig& cfg, const RtSchedParams& rt);

}  // namespace rtbench
