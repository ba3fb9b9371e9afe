#include "rtbench/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <system_error>

#include "rtbench/errors.hpp"

namespace rtbench {

namespace {

[[noreturn]] void throw_errno(const char* what) {
  throw std::system_error(errno, std::generic_category(), what);
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    throw UsageError("endpoint '" + text + "' is not host:port");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.empty()) ep.host = "0.0.0.0";
  // Port 0 is allowed: it means "any" for local bind addresses. Peers are
  // checked for a real port separately (Endpoint::valid()).
  const std::string port_text = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int port = std::stoi(port_text, &used);
    if (used != port_text.size() || port < 0 || port > 65535) {
      throw std::out_of_range("port");
    }
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw UsageError("invalid port '" + port_text + "' in endpoint '" + text + "'");
  }
  return ep;
}

std::string Endpoint::to_string() const {
  return host + ":" + std::to_string(port);
}

void SocketConfig::validate() const {
  if (priority_mark < 0 || priority_mark > 15) {
    throw std::invalid_argument("socket priority mark must be in 0..15");
  }
  if (tos && (*tos < 0 || *tos > 255)) {
    throw std::invalid_argument("IP TOS must be in 0..255");
  }
}

sockaddr_in resolve_ipv4(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const int rc = getaddrinfo(ep.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw UsageError("cannot resolve host '" + ep.host + "': " + gai_strerror(rc));
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

UdpSocket::UdpSocket() {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw_errno("socket(AF_INET, SOCK_DGRAM)");
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void UdpSocket::bind(const Endpoint& local) {
  sockaddr_in addr = resolve_ipv4(local);
  int reuse = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof(reuse));
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw_errno("bind");
  }
}

void UdpSocket::connect(const Endpoint& peer) {
  sockaddr_in addr = resolve_ipv4(peer);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw_errno("connect");
  }
}

void UdpSocket::set_priority(int priority) {
  if (setsockopt(fd_, SOL_SOCKET, SO_PRIORITY, &priority, sizeof(priority)) != 0) {
    throw_errno("setsockopt(SO_PRIORITY)");
  }
}

void UdpSocket::set_tos(int tos) {
  if (setsockopt(fd_, IPPROTO_IP, IP_TOS, &tos, sizeof(tos)) != 0) {
    throw_errno("setsockopt(IP_TOS)");
  }
}

void UdpSocket::set_nonblocking(bool enabled) {
  int flags = fcntl(fd_, F_GETFL, 0);
  if (flags < 0) throw_errno("fcntl(F_GETFL)");
  flags = enabled ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK);
  if (fcntl(fd_, F_SETFL, flags) < 0) throw_errno("fcntl(F_SETFL)");
}

void UdpSocket::configure(const SocketConfig& cfg) {
  cfg.validate();
  set_priority(cfg.priority_mark);
  if (cfg.tos) set_tos(*cfg.tos);
  bind(cfg.local);
}

std::size_t UdpSocket::send(std::span<const std::uint8_t> payload) {
  const ssize_t n = ::send(fd_, payload.data(), payload.size(), 0);
  if (n < 0) throw_errno("send");
  return static_cast<std::size_t>(n);
}

std::size_t UdpSocket::send_to(std::span<const std::uint8_t> payload,
                               const sockaddr_in& dest) {
  const ssize_t n = ::sendto(fd_, payload.data(), payload.size(), 0,
                             reinterpret_cast<const sockaddr*>(&dest), sizeof(dest));
  if (n < 0) throw_errno("sendto");
  return static_cast<std::size_t>(n);
}

std::optional<std::size_t> UdpSocket::recv(std::span<std::uint8_t> buf) {
  const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) return std::nullopt;
    throw_errno("recv");
  }
  return static_cast<std::size_t>(n);
}

std::optional<std::size_t> UdpSocket::recv_from(std::span<std::uint8_t> buf,
                                                sockaddr_in& src) {
  socklen_t len = sizeof(src);
  const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                               reinterpret_cast<sockaddr*>(&src), &len);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) return std::nullopt;
    throw_errno("recvfrom");
  }
  return static_cast<std::size_t>(n);
}

bool UdpSocket::wait_readable(std::uint64_t timeout_ns) {
  pollfd pfd{fd_, POLLIN, 0};
  timespec ts;
  ts.tv_sec = static_cast<time_t>(timeout_ns / kNanosPerSecond);
  ts.tv_nsec = static_cast<long>(timeout_ns % kNanosPerSecond);
  int rc;
  do {
    rc = ppoll(&pfd, 1, &ts, nullptr);
  } while (rc < 0 && errno == EINTR);
  if (rc < 0) throw_errno("ppoll");
  return rc > 0 && (pfd.revents & POLLIN) != 0;
}

std::uint16_t UdpSocket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw_errno("getsockname");
  }
  return ntohs(addr.sin_port);
}

}  // namespace rtbench
