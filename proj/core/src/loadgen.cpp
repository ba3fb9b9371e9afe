#include "rtbench/loadgen.hpp"

#include <fcntl.h>
#include <netinet/in.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <system_error>
#include <thread>

#include "rtbench/errors.hpp"

namespace fs = std::filesystem;

namespace rtbench {

namespace {

std::uint64_t parse_scaled(const std::string& text, std::uint64_t k,
                           std::uint64_t m, std::uint64_t g, const char* what) {
  if (text.empty()) throw UsageError(std::string("empty ") + what);
  std::uint64_t scale = 1;
  std::string digits = text;
  switch (text.back()) {
    case 'k': case 'K': scale = k; digits.pop_back(); break;
    case 'm': case 'M': scale = m; digits.pop_back(); break;
    case 'g': case 'G': scale = g; digits.pop_back(); break;
    default: break;
  }
  try {
    std::size_t pos = 0;
    const std::uint64_t value = std::stoull(digits, &pos);
    if (pos != digits.size()) throw std::invalid_argument(digits);
    return value * scale;
  } catch (const std::exception&) {
    throw UsageError(std::string("invalid ") + what + " '" + text + "'");
  }
}

}  // namespace

std::uint64_t parse_size_literal(const std::string& text) {
  return parse_scaled(text, 1ull << 10, 1ull << 20, 1ull << 30, "size");
}

std::uint64_t parse_bandwidth_literal(const std::string& text) {
  return parse_scaled(text, 1'000, 1'000'000, 1'000'000'000, "bandwidth");
}

std::uint64_t parse_duration_literal(const std::string& text) {
  if (text.empty()) throw UsageError("empty duration");
  std::uint64_t per_unit = kNanosPerSecond;
  std::string digits = text;
  switch (text.back()) {
    case 's': per_unit = kNanosPerSecond; digits.pop_back(); break;
    case 'm': per_unit = 60 * kNanosPerSecond; digits.pop_back(); break;
    case 'h': per_unit = 3600 * kNanosPerSecond; digits.pop_back(); break;
    default: break;
  }
  try {
    std::size_t pos = 0;
    const std::uint64_t value = std::stoull(digits, &pos);
    if (pos != digits.size()) throw std::invalid_argument(digits);
    return value * per_unit;
  } catch (const std::exception&) {
    throw UsageError("invalid duration '" + text + "'");
  }
}

void StressSpec::validate() const {
  if (cpu_workers < 0 || io_workers < 0 || vm_workers < 0 || disk_workers < 0) {
    throw std::invalid_argument("worker counts must be >= 0");
  }
  if (cpu_workers + io_workers + vm_workers + disk_workers == 0) {
    throw std::invalid_argument("at least one worker class must be > 0");
  }
}

StressSpec parse_stress_args(const std::vector<std::string>& args) {
  StressSpec spec;
  auto need_value = [&](std::size_t i, const std::string& flag) -> const std::string& {
    if (i + 1 >= args.size()) throw UsageError("flag " + flag + " needs a value");
    return args[i + 1];
  };
  auto parse_count = [&](const std::string& value, const std::string& flag) {
    try {
      std::size_t pos = 0;
      const int n = std::stoi(value, &pos);
      if (pos != value.size() || n < 0) throw std::invalid_argument(value);
      return n;
    } catch (const std::exception&) {
      throw UsageError("invalid count '" + value + "' for " + flag);
    }
  };
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& flag = args[i];
    if (flag == "-c" || flag == "--cpu") {
      spec.cpu_workers = parse_count(need_value(i, flag), flag);
      ++i;
    } else if (flag == "-i" || flag == "--io") {
      spec.io_workers = parse_count(need_value(i, flag), flag);
      ++i;
    } else if (flag == "-m" || flag == "--vm") {
      spec.vm_workers = parse_count(need_value(i, flag), flag);
      ++i;
    } else if (flag == "--vm-bytes") {
      spec.vm_bytes = parse_size_literal(need_value(i, flag));
      ++i;
    } else if (flag == "-d" || flag == "--hdd") {
      spec.disk_workers = parse_count(need_value(i, flag), flag);
      ++i;
    } else if (flag == "--hdd-bytes") {
      spec.disk_bytes = parse_size_literal(need_value(i, flag));
      ++i;
    } else if (flag == "-t" || flag == "--timeout") {
      spec.duration_ns = parse_duration_literal(need_value(i, flag));
      ++i;
    } else {
      throw UsageError("unknown stress flag '" + flag + "'");
    }
  }
  spec.validate();
  return spec;
}

bool StressReport::all_ok() const {
  for (const auto& w : workers) {
    if (!w.ok) return false;
  }
  return true;
}

namespace {

struct StopCondition {
  Timestamp end;
  bool unbounded;  // duration 0: run until the stop flag flips
  const std::atomic<bool>* stop;
  MonotonicClock* clock;

  bool reached() const {
    if (stop && stop->load(std::memory_order_relaxed)) return true;
    return !unbounded && clock->now() >= end;
  }
};

void cpu_worker(const StopCondition& cond, WorkerReport& report) {
  volatile double x = 1.0;
  while (!cond.reached()) {
    for (int i = 0; i < 10000; ++i) x = std::sqrt(x + static_cast<double>(i));
    ++report.iterations;
  }
}

void io_worker(const StopCondition& cond, const std::string& dir, WorkerReport& report) {
  const std::string path =
      dir + "/rtbench-io-" + std::to_string(::getpid()) + "-" +
      std::to_string(report.index);
  const int fd = ::open(path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0600);
  if (fd < 0) {
    report.ok = false;
    report.error = "cannot open " + path + ": " + std::strerror(errno);
    return;
  }
  char block[512];
  std::memset(block, 'x', sizeof(block));
  while (!cond.reached()) {
    if (::pwrite(fd, block, sizeof(block), 0) != static_cast<ssize_t>(sizeof(block)) ||
        ::fdatasync(fd) != 0) {
      report.ok = false;
      report.error = std::string("io churn failed: ") + std::strerror(errno);
      break;
    }
    ++report.iterations;
  }
  ::close(fd);
  ::unlink(path.c_str());
}

void vm_worker(const StopCondition& cond, std::uint64_t bytes, WorkerReport& report) {
  std::vector<char> arena;
  try {
    arena.resize(bytes);
  } catch (const std::bad_alloc&) {
    report.ok = false;
    report.error = "cannot allocate " + std::to_string(bytes) + " bytes";
    return;
  }
  // Touch one byte per page so every pass walks the whole mapping.
  constexpr std::size_t kPage = 4096;
  char value = 0;
  while (!cond.reached()) {
    for (std::size_t i = 0; i < arena.size(); i += kPage) arena[i] = value;
    ++value;
    ++report.iterations;
  }
}

void disk_worker(const StopCondition& cond, const std::string& dir,
                 std::uint64_t bytes, WorkerReport& report) {
  const std::string path =
      dir + "/rtbench-hdd-" + std::to_string(::getpid()) + "-" +
      std::to_string(report.index);
  std::vector<char> block(1 << 16, 'y');
  while (!cond.reached()) {
    const int fd = ::open(path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0600);
    if (fd < 0) {
      report.ok = false;
      report.error = "cannot open " + path + ": " + std::strerror(errno);
      return;
    }
    std::uint64_t written = 0;
    bool failed = false;
    while (written < bytes && !cond.reached()) {
      const std::size_t chunk =
          static_cast<std::size_t>(std::min<std::uint64_t>(block.size(), bytes - written));
      const ssize_t n = ::write(fd, block.data(), chunk);
      if (n <= 0) {
        report.ok = false;
        report.error = std::string("disk write failed: ") + std::strerror(errno);
        failed = true;
        break;
      }
      written += static_cast<std::uint64_t>(n);
    }
    ::close(fd);
    ::unlink(path.c_str());
    if (failed) return;
    if (written >= bytes) ++report.iterations;  // partial final pass is not a cycle
  }
}

}  // namespace

StressReport run_stress(const StressSpec& spec, const std::atomic<bool>* stop) {
  spec.validate();
  if (spec.duration_ns == 0 && stop == nullptr) {
    throw std::invalid_argument("stress with no duration needs a stop flag");
  }
  MonotonicClock clock;
  const Timestamp start = clock.now();
  const StopCondition cond{start + spec.duration_ns, spec.duration_ns == 0, stop,
                           &clock};

  StressReport report;
  std::size_t total = static_cast<std::size_t>(spec.cpu_workers + spec.io_workers +
                                               spec.vm_workers + spec.disk_workers);
  report.workers.resize(total);

  std::vector<std::thread> threads;
  threads.reserve(total);
  std::size_t slot = 0;
  for (int i = 0; i < spec.cpu_workers; ++i, ++slot) {
    report.workers[slot] = {"cpu", i, 0, true, ""};
    threads.emplace_back(cpu_worker, cond, std::ref(report.workers[slot]));
  }
  for (int i = 0; i < spec.io_workers; ++i, ++slot) {
    report.workers[slot] = {"io", i, 0, true, ""};
    threads.emplace_back(io_worker, cond, spec.work_dir, std::ref(report.workers[slot]));
  }
  for (int i = 0; i < spec.vm_workers; ++i, ++slot) {
    report.workers[slot] = {"vm", i, 0, true, ""};
    threads.emplace_back(vm_worker, cond, spec.vm_bytes, std::ref(report.workers[slot]));
  }
  for (int i = 0; i < spec.disk_workers; ++i, ++slot) {
    report.workers[slot] = {"hdd", i, 0, true, ""};
    threads.emplace_back(disk_worker, cond, spec.work_dir, spec.disk_bytes,
                         std::ref(report.workers[slot]));
  }
  for (auto& t : threads) t.join();

  report.duration_ns = elapsed_ns(start, clock.now());
  return report;
}

void TrafficSpec::validate() const {
  if (target_bandwidth_bps == 0) throw std::invalid_argument("bandwidth must be > 0");
  if (payload_size == 0 || payload_size > 65507) {
    throw std::invalid_argument("payload size must be in 1..65507");
  }
  if (!destination.valid()) throw std::invalid_argument("traffic needs a destination");
}

double TrafficReport::achieved_bps() const {
  if (duration_ns == 0) return 0.0;
  return static_cast<double>(bytes_sent) * 8.0 * 1e9 / static_cast<double>(duration_ns);
}

TrafficReport run_traffic(const TrafficSpec& spec, const std::atomic<bool>* stop) {
  spec.validate();
  if (spec.duration_ns == 0 && stop == nullptr) {
    throw std::invalid_argument("traffic with no duration needs a stop flag");
  }

  UdpSocket socket;
  socket.set_priority(spec.priority_mark);
  const sockaddr_in dest = resolve_ipv4(spec.destination);

  std::vector<std::uint8_t> payload(spec.payload_size, 0xBE);
  MonotonicClock clock;

  // Token state is kept in bit-nanoseconds: rate[bit/s] x elapsed[ns] accrues
  // exactly, and one packet costs bits x 1e9. A 10 ms bucket bounds bursts.
  const unsigned __int128 packet_cost =
      static_cast<unsigned __int128>(spec.payload_size) * 8u * kNanosPerSecond;
  const unsigned __int128 bucket_cap =
      static_cast<unsigned __int128>(spec.target_bandwidth_bps) * (10 * kNanosPerMilli);

  TrafficReport report;
  const bool unbounded = spec.duration_ns == 0;
  const Timestamp start = clock.now();
  const Timestamp end = start + spec.duration_ns;
  unsigned __int128 tokens = packet_cost < bucket_cap ? packet_cost : bucket_cap;
  Timestamp last_accrual = start;

  for (;;) {
    Timestamp now = clock.now();
    if (!unbounded && now >= end) break;
    if (stop && stop->load(std::memory_order_relaxed)) break;

    tokens += static_cast<unsigned __int128>(spec.target_bandwidth_bps) *
              elapsed_ns(last_accrual, now);
    if (tokens > bucket_cap) tokens = bucket_cap;
    last_accrual = now;

    while (tokens >= packet_cost) {
      try {
        socket.send_to({payload.data(), payload.size()}, dest);
        report.bytes_sent += payload.size();
        ++report.packets_sent;
      } catch (const std::system_error&) {
        ++report.send_failures;
      }
      tokens -= packet_cost;
    }

    // Sleep until the bucket can cover the next packet.
    const unsigned __int128 deficit = packet_cost - tokens;
    const std::uint64_t wait_ns = static_cast<std::uint64_t>(
        (deficit + spec.target_bandwidth_bps - 1) / spec.target_bandwidth_bps);
    Timestamp next{now.ns + wait_ns};
    if (!unbounded && next > end) next = end;
    clock.sleep_until(next);
  }

  report.duration_ns = elapsed_ns(start, clock.now());
  return report;
}

double UdpSink::Report::achieved_bps() const {
  if (duration_ns == 0) return 0.0;
  return static_cast<double>(bytes) * 8.0 * 1e9 / static_cast<double>(duration_ns);
}

UdpSink::UdpSink(Endpoint local) : local_(std::move(local)) {}

void UdpSink::bind() {
  socket_.bind(local_);
  socket_.set_nonblocking(true);
}

void UdpSink::run(const std::atomic<bool>& stop) {
  std::vector<std::uint8_t> buf(kMaxDatagramSize);
  MonotonicClock clock;
  sockaddr_in src{};
  std::uint64_t first_ns = 0;
  std::uint64_t last_ns = 0;

  while (!stop.load(std::memory_order_relaxed)) {
    if (!socket_.wait_readable(50 * kNanosPerMilli)) continue;
    while (auto n = socket_.recv_from({buf.data(), buf.size()}, src)) {
      const Timestamp now = clock.now();
      if (first_ns == 0) first_ns = now.ns;
      last_ns = now.ns;
      report_.bytes += *n;
      ++report_.packets;
      const std::uint64_t window = (now.ns - first_ns) / kNanosPerSecond;
      if (report_.windows.empty() || report_.windows.back().index != window) {
        report_.windows.push_back({window, 0, 0});
      }
      report_.windows.back().bytes += *n;
      ++report_.windows.back().packets;
    }
  }
  report_.duration_ns = last_ns - first_ns;
}

}  // namespace rtbench
