#include "rtbench/server.hpp"

#include <netinet/in.h>

#include <system_error>

#include "rtbench/probe.hpp"

namespace rtbench {

namespace {
// Bounds one ppoll so the stop flag is observed promptly even when idle.
constexpr std::uint64_t kStopPollSliceNs = 50 * kNanosPerMilli;
}  // namespace

RttServer::RttServer(SocketConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  buffer_.resize(kMaxDatagramSize);
}

void RttServer::bind() {
  socket_.set_priority(cfg_.priority_mark);
  if (cfg_.tos) socket_.set_tos(*cfg_.tos);
  socket_.bind(cfg_.local);
  socket_.set_nonblocking(true);
}

void RttServer::serve(const std::atomic<bool>& stop) {
  sockaddr_in src{};
  while (!stop.load(std::memory_order_relaxed)) {
    if (!socket_.wait_readable(kStopPollSliceNs)) continue;
    while (auto n = socket_.recv_from({buffer_.data(), buffer_.size()}, src)) {
      ++stats_.received;
      ProbePacket probe;
      if (decode_probe({buffer_.data(), *n}, probe) != DecodeStatus::ok) {
        ++stats_.decode_errors;
        continue;
      }
      try {
        socket_.send_to({buffer_.data(), *n}, src);
        ++stats_.echoed;
      } catch (const std::system_error&) {
        ++stats_.send_failures;
      }
    }
  }
}

ServerStats run_server(const SocketConfig& cfg, const RtSchedParams& rt,
                       const std::atomic<bool>& stop) {
  RttServer server(cfg);
  server.bind();
  apply_sched_params(rt);
  server.serve(stop);
  return server.stats();
}

}  // namespace rtbench
