#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "rtbench/socket.hpp"
#include "rtbench/time.hpp"
#include "rtbench/tuning.hpp"

namespace rtbench {

// "128M" -> 128 MiB. Sizes use binary suffixes (K/M/G), matching the stress
// tool syntax the flags are compatible with.
std::uint64_t parse_size_literal(const std::string& text);

// "100M" -> 100,000,000 bits/s. Bandwidth uses decimal suffixes (K/M/G).
std::uint64_t parse_bandwidth_literal(const std::string& text);

// "30" or "30s"/"2m"/"1h" -> nanoseconds.
std::uint64_t parse_duration_literal(const std::string& text);

// Background load mix: spinning CPU workers, sync-I/O churn, anonymous-memory
// touch loops, and file write/delete loops.
struct StressSpec {
  int cpu_workers = 0;
  int io_workers = 0;
  int vm_workers = 0;
  std::uint64_t vm_bytes = 256ull << 20;
  int disk_workers = 0;
  std::uint64_t disk_bytes = 1ull << 30;
  std::uint64_t duration_ns = 0;
  std::string work_dir = ".";  // where disk and io workers place scratch files

  void validate() const;

  friend bool operator==(const StressSpec&, const StressSpec&) = default;
};

// Parses stress-tool flag syntax: -c/--cpu N, -i/--io N, -m/--vm N,
// --vm-bytes SIZE, -d/--hdd N, --hdd-bytes SIZE, -t/--timeout DURATION.
StressSpec parse_stress_args(const std::vector<std::string>& args);

struct WorkerReport {
  std::string kind;  // "cpu", "io", "vm", "hdd"
  int index = 0;
  std::uint64_t iterations = 0;
  bool ok = true;
  std::string error;
};

struct StressReport {
  std::vector<WorkerReport> workers;
  std::uint64_t duration_ns = 0;

  bool all_ok() const;
};

// Runs the worker mix for spec.duration_ns (or until `stop`, if given).
StressReport run_stress(const StressSpec& spec,
                        const std::atomic<bool>* stop = nullptr);

// Paced best-effort UDP stream.
struct TrafficSpec {
  std::uint64_t target_bandwidth_bps = 100'000'000;
  std::size_t payload_size = 1470;
  Endpoint destination;
  std::uint64_t duration_ns = 0;
  int priority_mark = kBestEffortPriorityMark;

  void validate() const;
};

struct TrafficReport {
  std::uint64_t bytes_sent = 0;
  std::uint64_t packets_sent = 0;
  std::uint64_t send_failures = 0;
  std::uint64_t duration_ns = 0;

  double achieved_bps() const;
};

// Token-bucket paced sender: the bucket holds 10 ms of budget, so short
// stalls are absorbed without bursts large enough to distort interference.
TrafficReport run_traffic(const TrafficSpec& spec,
                          const std::atomic<bool>* stop = nullptr);

// Byte-counting UDP receiver, the measurement end of the pacing contract.
class UdpSink {
 public:
  struct Window {
    std::uint64_t index = 0;  // seconds since the first datagram
    std::uint64_t bytes = 0;
    std::uint64_t packets = 0;
  };

  struct Report {
    std::uint64_t bytes = 0;
    std::uint64_t packets = 0;
    std::uint64_t duration_ns = 0;  // first datagram to last datagram
    std::vector<Window> windows;

    double achieved_bps() const;
  };

  explicit UdpSink(Endpoint local);

  void bind();
  std::uint16_t port() const { return socket_.local_port(); }

  void run(const std::atomic<bool>& stop);

  const Report& report() const { return report_; }

 private:
  Endpoint local_;
  UdpSocket socket_;
  Report report_;
};

}  // namespace rtbench
