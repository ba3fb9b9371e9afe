#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtbench/tuning.hpp"

namespace rtbench {

enum class ActionKind {
  run_command,          // target = full command line
  write_file,           // target = path, payload = contents
  make_dir,             // target = path
  migrate_tasks,        // target = source tasks file, payload = destination
  irq_thread_priority,  // target = irq number, payload = fifo priority
  sched_probe,          // payload = "policy:priority", checks RT permission
};

const char* to_string(ActionKind kind);

// One concrete configuration intent. `group` labels a dependency chain:
// when a step fails, later steps of the same group are skipped.
struct ConfigAction {
  ActionKind kind;
  std::string group;
  std::string description;
  std::string target;
  std::string payload;

  friend bool operator==(const ConfigAction&, const ConfigAction&) = default;
};

// Filesystem roots the live backend touches. Overridable for sandboxes, both
// programmatically and via RTBENCH_IRQ_ROOT / RTBENCH_CPUSET_ROOT /
// RTBENCH_PROC_ROOT.
struct BackendPaths {
  std::string irq_root = "/proc/irq";
  std::string cpuset_root = "/sys/fs/cgroup/cpuset";
  std::string proc_root = "/proc";

  static BackendPaths from_environment();

  std::string irq_affinity_file(int irq) const;
  std::string cpuset_dir(const std::string& name) const;
};

inline constexpr const char* kRtCpusetName = "rtbench-rt";
inline constexpr const char* kSystemCpusetName = "rtbench-system";

// Compiles the plan into its ordered step list: qdisc, vlan map, IRQ
// affinities and thread priorities, cpuset shield, scheduler probe.
std::vector<ConfigAction> plan_actions(const TuningPlan& plan,
                                       const BackendPaths& paths);

class ConfigBackend {
 public:
  virtual ~ConfigBackend() = default;

  virtual bool dry_run() const = 0;

  // Mutations throw (std::runtime_error family) on failure.
  virtual void run_command(const std::string& command) = 0;
  virtual void write_file(const std::string& path, const std::string& contents) = 0;
  virtual void make_dir(const std::string& path) = 0;
  virtual void migrate_tasks(const std::string& from_tasks,
                             const std::string& to_tasks) = 0;
  virtual void set_irq_thread_priority(int irq, int priority) = 0;
  virtual void probe_sched(const RtSchedParams& params) = 0;

  // Reads return nullopt when the state cannot be observed.
  virtual std::optional<std::string> read_file(const std::string& path) = 0;
  virtual std::optional<std::string> read_command_output(const std::string& command) = 0;
};

enum class StepOutcome { ok, failed, skipped };

const char* to_string(StepOutcome outcome);

struct StepResult {
  ConfigAction action;
  StepOutcome outcome = StepOutcome::ok;
  std::string detail;  // failure reason, or which step caused the skip
};

struct ApplyReport {
  bool dry_run = false;
  std::vector<StepResult> steps;

  std::size_t count(StepOutcome outcome) const;
  bool all_ok() const { return count(StepOutcome::ok) == steps.size(); }
};

enum class CheckStatus { match, mismatch, unknown };

const char* to_string(CheckStatus status);

struct CheckResult {
  std::string item;
  std::string expected;
  std::string actual;
  CheckStatus status = CheckStatus::unknown;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  std::size_t count(CheckStatus status) const;
  bool consistent() const { return count(CheckStatus::mismatch) == 0; }
};

// Executes the plan's steps in order against the backend. A failed step marks
// the remaining steps of its group skipped; other groups still run.
ApplyReport apply(const TuningPlan& plan, ConfigBackend& backend,
                  const BackendPaths& paths = BackendPaths::from_environment());

// Reads the configured state back and compares it with the plan. CPU lists
// are compared as sets, so "0-1" and "0,1" agree.
VerifyReport verify(const TuningPlan& plan, ConfigBackend& backend,
                    const BackendPaths& paths = BackendPaths::from_environment());

// Records every intent without touching the system. Commands it understands
// (the qdisc and VLAN grammars) update a small device model so read-backs
// reflect prior writes; tests can prime files and command outputs directly.
class DryRunBackend : public ConfigBackend {
 public:
  bool dry_run() const override { return true; }

  void run_command(const std::string& command) override;
  void write_file(const std::string& path, const std::string& contents) override;
  void make_dir(const std::string& path) override;
  void migrate_tasks(const std::string& from_tasks,
                     const std::string& to_tasks) override;
  void set_irq_thread_priority(int irq, int priority) override;
  void probe_sched(const RtSchedParams& params) override;

  std::optional<std::string> read_file(const std::string& path) override;
  std::optional<std::string> read_command_output(const std::string& command) override;

  void prime_file(const std::string& path, const std::string& contents);
  void prime_command(const std::string& command, const std::string& output);

  const std::vector<std::string>& commands() const { return commands_; }
  const std::map<std::string, std::string>& files() const { return files_; }
  const std::vector<std::string>& dirs() const { return dirs_; }
  const std::vector<std::pair<std::string, std::string>>& migrations() const {
    return migrations_;
  }
  const std::vector<std::pair<int, int>>& thread_priorities() const {
    return thread_priorities_;
  }
  const std::vector<RtSchedParams>& probes() const { return probes_; }

 private:
  std::vector<std::string> commands_;
  std::map<std::string, std::string> files_;  // last contents per path
  std::vector<std::string> dirs_;
  std::vector<std::pair<std::string, std::string>> migrations_;
  std::vector<std::pair<int, int>> thread_priorities_;
  std::vector<RtSchedParams> probes_;
  std::map<std::string, std::string> primed_commands_;
  std::map<std::string, PriorityMap> qdisc_state_;     // device -> installed map
  std::map<std::string, VlanEgressMap> vlan_state_;    // interface -> egress map
};

// Touches the real system. Shell commands go through an injectable runner
// (return value = exit status, output captured) so tests never need tc/ip.
class LiveBackend : public ConfigBackend {
 public:
  using CommandRunner = std::function<int(const std::string& command,
                                          std::string& output)>;

  explicit LiveBackend(BackendPaths paths = BackendPaths::from_environment(),
                       CommandRunner runner = nullptr);

  bool dry_run() const override { return false; }

  void run_command(const std::string& command) override;
  void write_file(const std::string& path, const std::string& contents) override;
  void make_dir(const std::string& path) override;
  void migrate_tasks(const std::string& from_tasks,
                     const std::string& to_tasks) override;
  void set_irq_thread_priority(int irq, int priority) override;
  void probe_sched(const RtSchedParams& params) override;

  std::optional<std::string> read_file(const std::string& path) override;
  std::optional<std::string> read_command_output(const std::string& command) override;

 private:
  BackendPaths paths_;
  CommandRunner runner_;
};

}  // namespace rtbench
