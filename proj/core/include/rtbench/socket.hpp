#pragma once

#include <netinet/in.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "rtbench/probe.hpp"
#include "rtbench/time.hpp"

namespace rtbench {

// "host:port" pair; host may be a dotted IPv4 address or a name.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  // Parses "host:port" or ":port". Throws UsageError on bad syntax.
  static Endpoint parse(const std::string& text);

  std::string to_string() const;
  bool valid() const { return !host.empty() && port != 0; }

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

// Socket parameters shared by client, server and traffic tools.
struct SocketConfig {
  Endpoint local{"0.0.0.0", 0};
  Endpoint peer;                       // required for clients
  int priority_mark = 4;               // SKB priority via SO_PRIORITY, 0..15
  std::optional<int> tos;              // IP_TOS byte
  std::uint64_t receive_timeout_ns = 100 * kNanosPerMilli;

  void validate() const;  // throws std::invalid_argument on out-of-range fields

  friend bool operator==(const SocketConfig&, const SocketConfig&) = default;
};

// Thin RAII wrapper over a UDP socket. Errors surface as std::system_error;
// the receive path reports would-block as an empty optional instead.
class UdpSocket {
 public:
  UdpSocket();
  ~UdpSocket();
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  void bind(const Endpoint& local);
  void connect(const Endpoint& peer);
  void set_priority(int priority);
  void set_tos(int tos);
  void set_nonblocking(bool enabled);

  // Applies priority/tos and binds local; connect is the caller's choice.
  void configure(const SocketConfig& cfg);

  std::size_t send(std::span<const std::uint8_t> payload);
  std::size_t send_to(std::span<const std::uint8_t> payload, const sockaddr_in& dest);

  // nullopt on would-block (nonblocking socket with nothing queued).
  std::optional<std::size_t> recv(std::span<std::uint8_t> buf);
  std::optional<std::size_t> recv_from(std::span<std::uint8_t> buf, sockaddr_in& src);

  // ppoll for readability; false on timeout.
  bool wait_readable(std::uint64_t timeout_ns);

  std::uint16_t local_port() const;
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

// Resolves host:port to an IPv4 socket address. Throws UsageError when the
// host does not resolve.
sockaddr_in resolve_ipv4(const Endpoint& ep);

}  // namespace rtbench
