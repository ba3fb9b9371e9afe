#pragma once

#include <string>
#include <vector>

#include "rtbench/backend.hpp"
#include "rtbench/inventory.hpp"

namespace rtbench {

// Most field failures are environmental, so the CLI exposes these pre-flight
// probes as `doctor`. `fail` means the core measurement path or the RT
// scheduling it exists to exercise is unavailable; `warn` marks degraded
// optional features (tuning modes that need more CPUs, queues or cgroup
// mounts than the host offers).
enum class ProbeStatus { ok, warn, fail };

const char* to_string(ProbeStatus status);

struct CapabilityCheck {
  std::string name;
  ProbeStatus status = ProbeStatus::ok;
  std::string detail;
};

struct CapabilityReport {
  std::vector<CapabilityCheck> checks;

  std::size_t count(ProbeStatus status) const;
  bool ok() const { return count(ProbeStatus::fail) == 0; }
};

CapabilityReport run_doctor(const SystemInventory& inventory,
                            const BackendPaths& paths);

}  // namespace rtbench
