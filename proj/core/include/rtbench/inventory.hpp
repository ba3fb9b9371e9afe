#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtbench/sched.hpp"

namespace rtbench {

struct IrqInfo {
  int number = -1;
  std::string name;  // action name from the interrupt table, e.g. "eth1-tx-0"

  friend bool operator==(const IrqInfo&, const IrqInfo&) = default;
};

struct NicInfo {
  std::string name;
  std::size_t tx_queue_count = 0;
  std::vector<IrqInfo> irqs;  // IRQs whose action name references this NIC

  friend bool operator==(const NicInfo&, const NicInfo&) = default;
};

// What tuning plans are generated against: online CPUs, NICs with their
// transmit queue counts, and the IRQ table. detect() reads the live system;
// tests build instances directly or point the roots at a fixture tree.
struct SystemInventory {
  CpuSet online_cpus;
  std::vector<IrqInfo> irqs;
  std::vector<NicInfo> nics;

  static SystemInventory detect(const std::string& proc_root = "/proc",
                                const std::string& sys_root = "/sys");

  const NicInfo* find_nic(const std::string& name) const;

  // IRQs whose action name contains `pattern` (plain substring match).
  std::vector<IrqInfo> match_irqs(const std::string& pattern) const;
};

}  // namespace rtbench
