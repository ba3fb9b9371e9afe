#include "rtbench/capabilities.hpp"

#include <sys/mman.h>
#include <time.h>

#include <cerrno>
#include <cstring>
#include <exception>
#include <filesystem>
#include <sstream>
#include <thread>

#include "rtbench/errors.hpp"
#include "rtbench/report.hpp"
#include "rtbench/sched.hpp"
#include "rtbench/socket.hpp"
#include "rtbench/tuning.hpp"

namespace fs = std::filesystem;

namespace rtbench {

const char* to_string(ProbeStatus status) {
  switch (status) {
    case ProbeStatus::ok:
      return "ok";
    case ProbeStatus::warn:
      return "warn";
    case ProbeStatus::fail:
      return "fail";
  }
  return "?";
}

std::size_t CapabilityReport::count(ProbeStatus status) const {
  std::size_t n = 0;
  for (const auto& check : checks) {
    if (check.status == status) ++n;
  }
  return n;
}

namespace {

CapabilityCheck check_clock() {
  CapabilityCheck check{"monotonic-clock", ProbeStatus::ok, {}};
  timespec res{};
  if (clock_getres(CLOCK_MONOTONIC, &res) != 0) {
    check.status = ProbeStatus::fail;
    check.detail = std::strerror(errno);
    return check;
  }
  const long res_ns = res.tv_sec * 1'000'000'000L + res.tv_nsec;
  std::ostringstream out;
  out << "resolution " << res_ns << " ns";
  check.detail = out.str();
  if (res_ns > 1000) {
    check.status = ProbeStatus::fail;
    check.detail += " (too coarse for 1 us histogram bins)";
  }
  return check;
}

CapabilityCheck check_udp() {
  CapabilityCheck check{"udp-socket", ProbeStatus::ok, {}};
  try {
    UdpSocket sock;
    sock.bind(Endpoint{"127.0.0.1", 0});
    std::ostringstream out;
    out << "bound ephemeral port " << sock.local_port();
    check.detail = out.str();
  } catch (const std::exception& e) {
    check.status = ProbeStatus::fail;
    check.detail = e.what();
  }
  return check;
}

CapabilityCheck check_rt_sched() {
  CapabilityCheck check{"rt-scheduling", ProbeStatus::ok, {}};
  // Probe on a scratch thread so a granted SCHED_FIFO never outlives the check.
  std::exception_ptr error;
  std::thread probe([&error] {
    try {
      apply_sched_params(RtSchedParams::fifo(80, /*lock_memory=*/false));
    } catch (...) {
      error = std::current_exception();
    }
  });
  probe.join();
  if (error) {
    check.status = ProbeStatus::fail;
    try {
      std::rethrow_exception(error);
    } catch (const std::exception& e) {
      check.detail = e.what();
    }
  } else {
    check.detail = "SCHED_FIFO priority 80 granted";
  }
  return check;
}

CapabilityCheck check_mlock() {
  CapabilityCheck check{"memory-locking", ProbeStatus::ok, {}};
  if (mlockall(MCL_CURRENT | MCL_FUTURE) != 0) {
    check.status = ProbeStatus::fail;
    check.detail = std::string("mlockall: ") + std::strerror(errno);
    return check;
  }
  munlockall();
  check.detail = "mlockall granted";
  return check;
}

CapabilityCheck check_cpus(const SystemInventory& inventory) {
  CapabilityCheck check{"online-cpus", ProbeStatus::ok, {}};
  const std::size_t n = inventory.online_cpus.size();
  std::ostringstream out;
  out << n << " online (" << inventory.online_cpus.to_list_string() << ")";
  check.detail = out.str();
  if (n < 2) {
    check.status = ProbeStatus::warn;
    check.detail += "; rt-affinities and rt-isolation need at least 2";
  }
  return check;
}

CapabilityCheck check_nic(const SystemInventory& inventory) {
  CapabilityCheck check{"nic-queues", ProbeStatus::ok, {}};
  const NicInfo* nic = nullptr;
  for (const auto& candidate : inventory.nics) {
    if (candidate.name != "lo") {
      nic = &candidate;
      break;
    }
  }
  if (nic == nullptr) {
    check.status = ProbeStatus::warn;
    check.detail = "no non-loopback interface; tuning modes need a device";
    return check;
  }
  std::ostringstream out;
  out << nic->name << " has " << nic->tx_queue_count << " tx queues";
  check.detail = out.str();
  const auto needed = PriorityMap::rt_three_class().num_tc();
  if (nic->tx_queue_count < static_cast<std::size_t>(needed)) {
    check.status = ProbeStatus::warn;
    std::ostringstream note;
    note << "; the per-class qdisc needs " << needed;
    check.detail += note.str();
  }
  return check;
}

CapabilityCheck check_nic_irqs(const SystemInventory& inventory) {
  CapabilityCheck check{"nic-irqs", ProbeStatus::ok, {}};
  const NicInfo* nic = nullptr;
  for (const auto& candidate : inventory.nics) {
    if (candidate.name != "lo") {
      nic = &candidate;
      break;
    }
  }
  if (nic == nullptr) {
    check.status = ProbeStatus::warn;
    check.detail = "no non-loopback interface to match interrupts against";
    return check;
  }
  const auto irqs = inventory.match_irqs(nic->name);
  std::ostringstream out;
  out << irqs.size() << " interrupts match \"" << nic->name << "\"";
  check.detail = out.str();
  if (irqs.empty()) {
    check.status = ProbeStatus::warn;
    check.detail += "; IRQ affinity rules will not resolve";
  }
  return check;
}

CapabilityCheck check_dir(const std::string& name, const std::string& path,
                          const std::string& purpose) {
  CapabilityCheck check{name, ProbeStatus::ok, path};
  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    check.status = ProbeStatus::warn;
    check.detail = path + " missing; " + purpose;
  }
  return check;
}

CapabilityCheck check_kernel() {
  CapabilityCheck check{"kernel", ProbeStatus::ok, {}};
  check.detail = EnvironmentInfo::capture({}).kernel_version;
  return check;
}

}  // namespace

CapabilityReport run_doctor(const SystemInventory& inventory,
                            const BackendPaths& paths) {
  CapabilityReport report;
  report.checks.push_back(check_kernel());
  report.checks.push_back(check_clock());
  report.checks.push_back(check_udp());
  report.checks.push_back(check_rt_sched());
  report.checks.push_back(check_mlock());
  report.checks.push_back(check_cpus(inventory));
  report.checks.push_back(check_nic(inventory));
  report.checks.push_back(check_nic_irqs(inventory));
  report.checks.push_back(check_dir("irq-root", paths.irq_root,
                                    "IRQ affinity writes have nowhere to go"));
  report.checks.push_back(check_dir("cpuset-root", paths.cpuset_root,
                                    "CPU isolation needs the cpuset hierarchy"));
  return report;
}

}  // namespace rtbench
