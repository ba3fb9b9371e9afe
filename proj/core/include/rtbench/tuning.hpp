#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtbench/inventory.hpp"
#include "rtbench/sched.hpp"

namespace rtbench {

// The four configurations compared by the benchmark matrix.
enum class TuningMode {
  no_rt,          // marking only, stock scheduler
  rt_normal,      // + FIFO priority 80, memory locking, qdisc and VLAN maps
  rt_affinities,  // + application and RT-queue IRQ pinned to one CPU
  rt_isolation,   // + that CPU shielded via cpuset, all other IRQs steered away
};

const char* to_string(TuningMode mode);
TuningMode parse_tuning_mode(const std::string& text);  // UsageError on unknown

// Hardware-queue span "count@offset" as written in the qdisc grammar.
struct QueueSpan {
  int count = 1;
  int offset = 0;

  friend bool operator==(const QueueSpan&, const QueueSpan&) = default;
};

inline constexpr int kSkbPriorityLevels = 16;
inline constexpr int kRtPriorityMark = 4;          // SKB priority of RT traffic
inline constexpr int kBestEffortPriorityMark = 0;  // background traffic
inline constexpr int kIrqThreadPriority = 85;      // above the app's 80

// SKB priority (0-15) -> traffic class, plus the per-class hardware queue
// layout for a multiqueue priority qdisc.
class PriorityMap {
 public:
  PriorityMap() = default;
  PriorityMap(std::array<int, kSkbPriorityLevels> map, int num_tc,
              std::vector<QueueSpan> queues);

  // The three-class map this suite uses for RT runs: priority 4 -> queue 0
  // (RT), priorities 2-3 -> queue 1, everything else -> queue 2.
  static PriorityMap rt_three_class();

  void validate() const;  // std::invalid_argument on violation

  struct ClassAssignment {
    int traffic_class = 0;
    int queue = 0;

    friend bool operator==(const ClassAssignment&, const ClassAssignment&) = default;
  };

  // Pure lookup; throws std::domain_error unless 0 <= skb_priority < 16.
  // The queue is the first queue of the matched class's span.
  ClassAssignment classify(int skb_priority) const;

  const std::array<int, kSkbPriorityLevels>& entries() const { return map_; }
  int num_tc() const { return num_tc_; }
  const std::vector<QueueSpan>& queue_layout() const { return queues_; }

  friend bool operator==(const PriorityMap&, const PriorityMap&) = default;

 private:
  std::array<int, kSkbPriorityLevels> map_{};
  int num_tc_ = 1;
  std::vector<QueueSpan> queues_{QueueSpan{}};
};

// SKB priority (0-7) -> VLAN PCP value for tagged egress.
struct VlanEgressMap {
  std::string interface;  // tagged interface, e.g. "eth1.2"
  std::array<int, 8> pcp_of_priority{};

  static VlanEgressMap identity(std::string interface);

  void validate() const;

  friend bool operator==(const VlanEgressMap&, const VlanEgressMap&) = default;
};

struct IrqAffinityRule {
  std::string match;       // queue-name pattern the IRQs were selected by
  std::vector<int> irqs;   // resolved IRQ numbers
  CpuSet cpus;
  std::optional<int> thread_priority;  // FIFO priority for the IRQ thread

  void validate() const;

  friend bool operator==(const IrqAffinityRule&, const IrqAffinityRule&) = default;
};

struct CpuIsolationPlan {
  CpuSet isolated;
  CpuSet irq_default;           // where every non-RT IRQ is steered
  bool migrate_existing_tasks = true;
  std::vector<int> non_rt_irqs;  // snapshot so apply needs no inventory

  void validate() const;  // isolated and irq_default must be disjoint

  friend bool operator==(const CpuIsolationPlan&, const CpuIsolationPlan&) = default;
};

// Optional token-bucket shaper on the best-effort class; off by default.
struct TbfSpec {
  std::uint64_t rate_bps = 0;
  std::uint64_t burst_bytes = 0;
  std::uint64_t limit_bytes = 0;

  void validate() const;

  friend bool operator==(const TbfSpec&, const TbfSpec&) = default;
};

struct TuningPlan {
  TuningMode mode = TuningMode::no_rt;
  std::string device;       // NIC carrying the qdisc, empty = no qdisc step
  int priority_mark = kRtPriorityMark;
  std::optional<PriorityMap> priority_map;
  std::optional<VlanEgressMap> vlan_map;
  std::optional<RtSchedParams> sched;
  std::optional<CpuSet> app_cpus;  // affinity for the measurement processes
  std::vector<IrqAffinityRule> irq_rules;
  std::optional<CpuIsolationPlan> isolation;
  std::optional<TbfSpec> tbf;

  void validate() const;

  std::string to_json() const;  // pretty-printed, stable field order
  static TuningPlan from_json(const std::string& text);  // RecordError on bad input

  friend bool operator==(const TuningPlan&, const TuningPlan&) = default;
};

struct PlanOptions {
  std::string device;                  // default: first non-loopback NIC
  std::string vlan_interface;          // default: "<device>.2"
  std::string rt_queue_irq_pattern;    // default: "<device>-tx-0"
  std::optional<int> rt_cpu;           // default: second online CPU
  int priority_mark = kRtPriorityMark;
};

// Builds the declarative plan for one mode against the given inventory.
// Isolation and affinity modes need at least two online CPUs; otherwise a
// CapabilityError is raised.
TuningPlan plan_for_mode(TuningMode mode, const SystemInventory& inventory,
                         const PlanOptions& options = {});

// --- command grammar -------------------------------------------------------
// Emission is deterministic; each emitter has a parser and parse(emit(x)) == x.

std::string mqprio_command(const PriorityMap& map, const std::string& device);
PriorityMap parse_mqprio_command(const std::string& command,
                                 std::string* device = nullptr);

std::string vlan_egress_command(const VlanEgressMap& map);
VlanEgressMap parse_vlan_egress_command(const std::string& command);

std::string tbf_command(const TbfSpec& tbf, const std::string& device, int parent_queue);

// Read-back shape of the installed qdisc tree: the mqprio root line, its
// queue spans, and one default child per hardware queue (highest first).
std::string render_qdisc_show(const PriorityMap& map);
std::optional<PriorityMap> parse_qdisc_show(const std::string& output);

// Read-back shape of the link's egress QoS mapping, one line.
std::string render_vlan_show(const VlanEgressMap& map);
std::optional<VlanEgressMap> parse_vlan_show(const std::string& output);

}  // namespace rtbench
