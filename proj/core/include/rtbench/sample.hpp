#pragma once

#include <cstdint>

#include "rtbench/time.hpp"

namespace rtbench {

// Terminal classification of one measured cycle.
//   ok           — reply arrived with rtt <= deadline
//   late_arrival — reply arrived, rtt > deadline (received AND a missed deadline)
//   lost         — no reply within the loss horizon
//   send_overrun — the wake overran the next cycle's slot and no reply ever
//                  arrived; counts as unreceived, kept distinct from plain loss
enum class SampleStatus : std::uint8_t {
  pending,  // not yet finalized (never observable after a run completes)
  ok,
  lost,
  late_arrival,
  send_overrun,
};

const char* to_string(SampleStatus s);

// One measured cycle. rtt_ns and t_recv are meaningful iff received().
struct RoundTripSample {
  std::uint64_t sequence = 0;
  Timestamp t_send;            // T1
  Timestamp t_recv;            // T2, valid iff received()
  std::uint64_t rtt_ns = 0;    // T2 - T1, valid iff received()
  SampleStatus status = SampleStatus::pending;
  // Wake happened after the successor's target. The probe is still sent so
  // sequence accounting stays one probe per cycle, but the sample carries no
  // send-jitter information.
  bool overrun = false;

  bool received() const {
    return status == SampleStatus::ok || status == SampleStatus::late_arrival;
  }

  friend bool operator==(const RoundTripSample&, const RoundTripSample&) = default;
};

}  // namespace rtbench
