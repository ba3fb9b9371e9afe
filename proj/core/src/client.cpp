#include "rtbench/client.hpp"

#include <netinet/in.h>

#include <stdexcept>
#include <system_error>

namespace rtbench {

namespace {

// Lead time before cycle 0 so socket setup never eats into the schedule.
constexpr std::uint64_t kAnchorLeadPeriods = 2;

struct ReceiveCounters {
  std::uint64_t protocol_errors = 0;
};

// Drains every datagram currently queued on the socket into the matcher.
void drain_replies(UdpSocket& socket, std::span<std::uint8_t> buf,
                   MonotonicClock& clock, ReplyMatcher& matcher,
                   ReceiveCounters& counters) {
  sockaddr_in src{};
  while (auto n = socket.recv_from(buf, src)) {
    const Timestamp t_recv = clock.now();
    ProbePacket probe;
    if (decode_probe({buf.data(), *n}, probe) != DecodeStatus::ok) {
      ++counters.protocol_errors;
      continue;
    }
    matcher.on_reply(probe.sequence, t_recv);
  }
}

// Services the socket until `until`, feeding replies to the matcher.
void receive_until(UdpSocket& socket, std::span<std::uint8_t> buf,
                   MonotonicClock& clock, ReplyMatcher& matcher,
                   ReceiveCounters& counters, Timestamp until) {
  for (;;) {
    const Timestamp now = clock.now();
    if (now >= until) return;
    if (socket.wait_readable(until.ns - now.ns)) {
      drain_replies(socket, buf, clock, matcher, counters);
    }
    matcher.advance(clock.now());
  }
}

}  // namespace

void ClientConfig::validate() const {
  socket.validate();
  cycles.validate();
  if (!socket.peer.valid()) {
    throw std::invalid_argument("client requires a peer endpoint");
  }
  if (payload_size < kProbeHeaderSize) {
    throw std::invalid_argument("payload size must be at least the probe header");
  }
  if (loss_horizon_periods == 0) {
    throw std::invalid_argument("loss horizon must be >= 1 period");
  }
}

ClientResult run_client(const ClientConfig& cfg, const RtSchedParams& rt) {
  cfg.validate();

  UdpSocket socket;
  socket.configure(cfg.socket);
  socket.set_nonblocking(true);
  const sockaddr_in peer = resolve_ipv4(cfg.socket.peer);

  apply_sched_params(rt);

  MonotonicClock clock;
  const std::uint64_t count = cfg.cycles.cycle_count();
  ReplyMatcher matcher(count, {cfg.cycles.period_ns, cfg.cycles.deadline_ns,
                               cfg.loss_horizon_periods});
  std::vector<std::uint8_t> send_buf(cfg.payload_size);
  std::vector<std::uint8_t> recv_buf(kMaxDatagramSize);
  ReceiveCounters counters;
  std::uint64_t send_failures = 0;

  const Timestamp anchor = clock.now() + kAnchorLeadPeriods * cfg.cycles.period_ns;
  CycleSchedule schedule(anchor, cfg.cycles);

  for (std::uint64_t n = 0; n < count; ++n) {
    const Timestamp wake = clock.sleep_until(schedule.target(n));
    // A wake landing past the successor's target means this cycle's send
    // jitter is meaningless; the probe still goes out to keep sequence
    // accounting intact, and the schedule stays anchored at t0.
    const bool overrun = wake > schedule.target(n + 1);

    const Timestamp t_send = clock.now();
    encode_probe({n, t_send.ns}, {send_buf.data(), send_buf.size()});
    matcher.on_send(n, t_send, overrun);
    try {
      socket.send_to({send_buf.data(), send_buf.size()}, peer);
    } catch (const std::system_error&) {
      ++send_failures;  // the sample runs out its loss horizon as usual
    }

    receive_until(socket, {recv_buf.data(), recv_buf.size()}, clock, matcher,
                  counters, schedule.target(n + 1));
  }

  // Post-run drain: late replies for the tail cycles are still classified.
  const Timestamp drain_end =
      clock.now() + cfg.loss_horizon_periods * cfg.cycles.period_ns;
  receive_until(socket, {recv_buf.data(), recv_buf.size()}, clock, matcher,
                counters, drain_end);
  matcher.finalize();

  ClientResult result;
  result.anchor = anchor;
  result.warmup_cycles = cfg.cycles.warmup_cycles;
  result.samples = matcher.samples();
  result.protocol_errors = counters.protocol_errors;
  result.send_failures = send_failures;

  RunAccumulator acc(cfg.cycles.deadline_ns, LatencyHistogram{},
                     cfg.collect_timeseries, cfg.cycles.warmup_cycles);
  for (std::uint64_t n = cfg.cycles.warmup_cycles; n < count; ++n) {
    acc.record(result.samples[n]);
  }
  result.summary = acc.summary();
  result.summary.duplicates = matcher.duplicates();
  result.summary.stale_replies = matcher.stale_replies();
  result.histogram = acc.histogram();
  result.timeseries = acc.timeseries();
  return result;
}

}  // namespace rtbench
