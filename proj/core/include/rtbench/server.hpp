#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "rtbench/sched.hpp"
#include "rtbench/socket.hpp"

namespace rtbench {

struct ServerStats {
  std::uint64_t received = 0;       // datagrams taken off the socket
  std::uint64_t echoed = 0;         // valid probes sent back unchanged
  std::uint64_t decode_errors = 0;  // datagrams that failed probe validation
  std::uint64_t send_failures = 0;  // echo sends that errored (loop continues)
};

// Echo server half of the ping-pong test. Binding is split from serving so
// callers can bind to port 0 and learn the real port before starting a client.
class RttServer {
 public:
  explicit RttServer(SocketConfig cfg);

  void bind();
  std::uint16_t port() const { return socket_.local_port(); }

  // Receives and echoes until `stop` becomes true. Only datagrams that decode
  // as probes are echoed; everything else counts as a decode error.
  void serve(const std::atomic<bool>& stop);

  const ServerStats& stats() const { return stats_; }

 private:
  SocketConfig cfg_;
  UdpSocket socket_;
  ServerStats stats_;
  std::vector<std::uint8_t> buffer_;
};

// Applies the scheduling parameters, then binds and serves until `stop`.
ServerStats run_server(const SocketConfig& cfg, const RtSchedParams& rt,
                       const std::atomic<bool>& stop);

}  // namespace rtbench
