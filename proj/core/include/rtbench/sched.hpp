#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace rtbench {

// A set of CPU indices with the kernel's list syntax ("0,2-3") for
// formatting and parsing. Stored sorted and deduplicated.
class CpuSet {
 public:
  CpuSet() = default;
  CpuSet(std::initializer_list<int> cpus);
  explicit CpuSet(std::vector<int> cpus);

  // Parses "0,2-3" / "1" / "" (empty set). Throws UsageError on bad syntax.
  static CpuSet parse(const std::string& list);

  void add(int cpu);
  bool contains(int cpu) const;
  bool empty() const { return cpus_.empty(); }
  std::size_t size() const { return cpus_.size(); }
  const std::vector<int>& cpus() const { return cpus_; }

  // Kernel cpu-list syntax with ranges collapsed, e.g. "0,2-3".
  std::string to_list_string() const;

  bool intersects(const CpuSet& other) const;

  friend bool operator==(const CpuSet&, const CpuSet&) = default;

 private:
  std::vector<int> cpus_;
};

// Scheduler and memory-locking parameters for a measurement thread.
struct RtSchedParams {
  enum class Policy { other, fifo };

  Policy policy = Policy::other;
  int priority = 0;  // 1..99, meaningful iff policy == fifo
  bool lock_memory = false;

  static RtSchedParams fifo(int priority = 80, bool lock_memory = true) {
    return RtSchedParams{Policy::fifo, priority, lock_memory};
  }

  // Throws std::invalid_argument when priority is set without fifo or
  // outside 1..99.
  void validate() const;

  friend bool operator==(const RtSchedParams&, const RtSchedParams&) = default;
};

const char* to_string(RtSchedParams::Policy p);

// Applies params to the calling thread: mlockall when requested, then
// SCHED_FIFO at the given priority. Throws CapabilityError naming the
// missing privilege (CAP_SYS_NICE / RLIMIT_RTPRIO) on refusal.
void apply_sched_params(const RtSchedParams& params);

// Pins the calling thread to the given CPUs. Throws CapabilityError.
void set_cpu_affinity(const CpuSet& cpus);

// The calling thread's current affinity, for save/restore around pinned runs.
CpuSet current_cpu_affinity();

// Snapshot of the calling thread's scheduler policy and priority, so runs
// that raise themselves to SCHED_FIFO can be bracketed and undone.
struct SchedSnapshot {
  int policy = 0;
  int priority = 0;
};

SchedSnapshot current_sched();
void restore_sched(const SchedSnapshot& snapshot);

// Drops the calling thread to SCHED_OTHER. In-process load generators call
// this first: background load competing at RT priority would starve the
// measurement thread instead of merely loading the system.
void set_normal_sched();

// Writes the calling process into the cpuset at the given cgroup directory
// (its "tasks" file). Throws CapabilityError on failure.
void join_cpuset(const std::string& cpuset_dir);

}  // namespace rtbench
