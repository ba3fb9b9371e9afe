#include "rtbench/backend.hpp"

#include <pthread.h>
#include <sched.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rtbench/errors.hpp"

namespace fs = std::filesystem;

namespace rtbench {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value && *value ? value : fallback;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string sched_probe_payload(const RtSchedParams& params) {
  std::ostringstream out;
  out << (params.policy == RtSchedParams::Policy::fifo ? "fifo" : "other") << ':'
      << params.priority;
  return out.str();
}

}  // namespace

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::run_command: return "command";
    case ActionKind::write_file: return "write";
    case ActionKind::make_dir: return "mkdir";
    case ActionKind::migrate_tasks: return "migrate";
    case ActionKind::irq_thread_priority: return "irq-thread";
    case ActionKind::sched_probe: return "sched-probe";
  }
  return "?";
}

const char* to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::ok: return "ok";
    case StepOutcome::failed: return "failed";
    case StepOutcome::skipped: return "skipped";
  }
  return "?";
}

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::match: return "match";
    case CheckStatus::mismatch: return "mismatch";
    case CheckStatus::unknown: return "unknown";
  }
  return "?";
}

BackendPaths BackendPaths::from_environment() {
  BackendPaths paths;
  paths.irq_root = env_or("RTBENCH_IRQ_ROOT", paths.irq_root);
  paths.cpuset_root = env_or("RTBENCH_CPUSET_ROOT", paths.cpuset_root);
  paths.proc_root = env_or("RTBENCH_PROC_ROOT", paths.proc_root);
  return paths;
}

std::string BackendPaths::irq_affinity_file(int irq) const {
  return irq_root + "/" + std::to_string(irq) + "/smp_affinity_list";
}

std::string BackendPaths::cpuset_dir(const std::string& name) const {
  return cpuset_root + "/" + name;
}

std::vector<ConfigAction> plan_actions(const TuningPlan& plan,
                                       const BackendPaths& paths) {
  plan.validate();
  std::vector<ConfigAction> actions;

  if (plan.priority_map && !plan.device.empty()) {
    actions.push_back({ActionKind::run_command, "qdisc",
                       "install mqprio qdisc on " + plan.device,
                       mqprio_command(*plan.priority_map, plan.device), ""});
    if (plan.tbf) {
      const int best_effort_queue =
          plan.priority_map->classify(kBestEffortPriorityMark).queue;
      actions.push_back({ActionKind::run_command, "qdisc",
                         "shape best-effort queue on " + plan.device,
                         tbf_command(*plan.tbf, plan.device, best_effort_queue), ""});
    }
  }

  if (plan.vlan_map) {
    actions.push_back({ActionKind::run_command, "vlan",
                       "set VLAN egress map on " + plan.vlan_map->interface,
                       vlan_egress_command(*plan.vlan_map), ""});
  }

  for (const auto& rule : plan.irq_rules) {
    const std::string group = "irq:" + rule.match;
    for (int irq : rule.irqs) {
      actions.push_back({ActionKind::write_file, group,
                         "pin irq " + std::to_string(irq) + " to cpus " +
                             rule.cpus.to_list_string(),
                         paths.irq_affinity_file(irq),
                         rule.cpus.to_list_string() + "\n"});
      if (rule.thread_priority) {
        actions.push_back({ActionKind::irq_thread_priority, group,
                           "raise irq " + std::to_string(irq) + " thread to fifo " +
                               std::to_string(*rule.thread_priority),
                           std::to_string(irq),
                           std::to_string(*rule.thread_priority)});
      }
    }
  }

  if (plan.isolation) {
    const auto& iso = *plan.isolation;
    for (int irq : iso.non_rt_irqs) {
      actions.push_back({ActionKind::write_file, "irq:default",
                         "steer irq " + std::to_string(irq) + " to cpus " +
                             iso.irq_default.to_list_string(),
                         paths.irq_affinity_file(irq),
                         iso.irq_default.to_list_string() + "\n"});
    }

    const std::string rt_dir = paths.cpuset_dir(kRtCpusetName);
    const std::string sys_dir = paths.cpuset_dir(kSystemCpusetName);
    actions.push_back({ActionKind::make_dir, "cpuset",
                       "create cpuset " + std::string(kSystemCpusetName), sys_dir, ""});
    actions.push_back({ActionKind::write_file, "cpuset",
                       "confine system tasks to cpus " + iso.irq_default.to_list_string(),
                       sys_dir + "/cpuset.cpus", iso.irq_default.to_list_string() + "\n"});
    actions.push_back({ActionKind::write_file, "cpuset", "system cpuset memory node",
                       sys_dir + "/cpuset.mems", "0\n"});
    actions.push_back({ActionKind::make_dir, "cpuset",
                       "create cpuset " + std::string(kRtCpusetName), rt_dir, ""});
    actions.push_back({ActionKind::write_file, "cpuset",
                       "shield cpus " + iso.isolated.to_list_string(),
                       rt_dir + "/cpuset.cpus", iso.isolated.to_list_string() + "\n"});
    actions.push_back({ActionKind::write_file, "cpuset", "rt cpuset memory node",
                       rt_dir + "/cpuset.mems", "0\n"});
    if (iso.migrate_existing_tasks) {
      actions.push_back({ActionKind::migrate_tasks, "cpuset",
                         "migrate existing tasks off the shielded cpus",
                         paths.cpuset_root + "/tasks", sys_dir + "/tasks"});
    }
  }

  if (plan.sched) {
    actions.push_back({ActionKind::sched_probe, "sched",
                       "check RT scheduling permission", "",
                       sched_probe_payload(*plan.sched)});
  }

  return actions;
}

// --- apply ---------------------------------------------------------------------

ApplyReport apply(const TuningPlan& plan, ConfigBackend& backend,
                  const BackendPaths& paths) {
  ApplyReport report;
  report.dry_run = backend.dry_run();
  std::map<std::string, std::string> failed_groups;  // group -> first failure

  for (const auto& action : plan_actions(plan, paths)) {
    StepResult step{action, StepOutcome::ok, ""};
    if (auto it = failed_groups.find(action.group); it != failed_groups.end()) {
      step.outcome = StepOutcome::skipped;
      step.detail = "skipped after: " + it->second;
      report.steps.push_back(std::move(step));
      continue;
    }
    try {
      switch (action.kind) {
        case ActionKind::run_command:
          backend.run_command(action.target);
          break;
        case ActionKind::write_file:
          backend.write_file(action.target, action.payload);
          break;
        case ActionKind::make_dir:
          backend.make_dir(action.target);
          break;
        case ActionKind::migrate_tasks:
          backend.migrate_tasks(action.target, action.payload);
          break;
        case ActionKind::irq_thread_priority:
          backend.set_irq_thread_priority(std::stoi(action.target),
                                          std::stoi(action.payload));
          break;
        case ActionKind::sched_probe:
          backend.probe_sched(*plan.sched);
          break;
      }
    } catch (const std::exception& e) {
      step.outcome = StepOutcome::failed;
      step.detail = e.what();
      failed_groups.emplace(action.group, action.description);
    }
    report.steps.push_back(std::move(step));
  }
  return report;
}

std::size_t ApplyReport::count(StepOutcome outcome) const {
  std::size_t n = 0;
  for (const auto& step : steps) {
    if (step.outcome == outcome) ++n;
  }
  return n;
}

std::size_t VerifyReport::count(CheckStatus status) const {
  std::size_t n = 0;
  for (const auto& check : checks) {
    if (check.status == status) ++n;
  }
  return n;
}

// --- verify --------------------------------------------------------------------

namespace {

CheckResult check_cpu_list_file(ConfigBackend& backend, const std::string& item,
                                const std::string& path, const CpuSet& expected) {
  CheckResult check{item, expected.to_list_string(), "", CheckStatus::unknown};
  const auto raw = backend.read_file(path);
  if (!raw) {
    check.actual = "(unreadable: " + path + ")";
    return check;
  }
  try {
    const CpuSet actual = CpuSet::parse(strip(*raw));
    check.actual = actual.to_list_string();
    check.status =
        actual.cpus() == expected.cpus() ? CheckStatus::match : CheckStatus::mismatch;
  } catch (const std::exception&) {
    check.actual = strip(*raw);
    check.status = CheckStatus::mismatch;
  }
  return check;
}

}  // namespace

VerifyReport verify(const TuningPlan& plan, ConfigBackend& backend,
                    const BackendPaths& paths) {
  plan.validate();
  VerifyReport report;

  if (plan.priority_map && !plan.device.empty()) {
    CheckResult check{"qdisc " + plan.device,
                      mqprio_command(*plan.priority_map, plan.device), "",
                      CheckStatus::unknown};
    const auto out = backend.read_command_output("tc -g qdisc show dev " + plan.device);
    if (out) {
      if (auto parsed = parse_qdisc_show(*out)) {
        check.actual = mqprio_command(*parsed, plan.device);
        check.status = *parsed == *plan.priority_map ? CheckStatus::match
                                                     : CheckStatus::mismatch;
      } else {
        check.actual = strip(*out);
        check.status = CheckStatus::mismatch;
      }
    } else {
      check.actual = "(no qdisc output)";
    }
    report.checks.push_back(std::move(check));
  }

  if (plan.vlan_map) {
    CheckResult check{"vlan egress " + plan.vlan_map->interface,
                      vlan_egress_command(*plan.vlan_map), "", CheckStatus::unknown};
    const auto out =
        backend.read_command_output("ip -d link show " + plan.vlan_map->interface);
    if (out) {
      if (auto parsed = parse_vlan_show(*out)) {
        parsed->interface = plan.vlan_map->interface;  // compare the mapping itself
        check.actual = vlan_egress_command(*parsed);
        check.status = parsed->pcp_of_priority == plan.vlan_map->pcp_of_priority
                           ? CheckStatus::match
                           : CheckStatus::mismatch;
      } else {
        check.actual = strip(*out);
        check.status = CheckStatus::mismatch;
      }
    } else {
      check.actual = "(no link output)";
    }
    report.checks.push_back(std::move(check));
  }

  for (const auto& rule : plan.irq_rules) {
    for (int irq : rule.irqs) {
      report.checks.push_back(check_cpu_list_file(
          backend, "irq " + std::to_string(irq) + " affinity",
          paths.irq_affinity_file(irq), rule.cpus));
    }
  }

  if (plan.isolation) {
    const auto& iso = *plan.isolation;
    for (int irq : iso.non_rt_irqs) {
      report.checks.push_back(check_cpu_list_file(
          backend, "irq " + std::to_string(irq) + " affinity",
          paths.irq_affinity_file(irq), iso.irq_default));
    }
    report.checks.push_back(check_cpu_list_file(
        backend, "cpuset " + std::string(kRtCpusetName) + " cpus",
        paths.cpuset_dir(kRtCpusetName) + "/cpuset.cpus", iso.isolated));
    report.checks.push_back(check_cpu_list_file(
        backend, "cpuset " + std::string(kSystemCpusetName) + " cpus",
        paths.cpuset_dir(kSystemCpusetName) + "/cpuset.cpus", iso.irq_default));
  }

  if (plan.sched) {
    CheckResult check{"rt scheduling permission", sched_probe_payload(*plan.sched),
                      "", CheckStatus::unknown};
    try {
      backend.probe_sched(*plan.sched);
      check.actual = check.expected;
      check.status = CheckStatus::match;
    } catch (const std::exception& e) {
      check.actual = e.what();
      check.status = CheckStatus::mismatch;
    }
    report.checks.push_back(std::move(check));
  }

  return report;
}

// --- dry-run backend -------------------------------------------------------------

void DryRunBackend::run_command(const std::string& command) {
  commands_.push_back(command);
  // Understands the two grammars this suite emits so later read-backs see the
  // effect of the command; anything else is recorded verbatim.
  try {
    std::string device;
    const PriorityMap map = parse_mqprio_command(command, &device);
    qdisc_state_.insert_or_assign(device, map);
    return;
  } catch (const std::exception&) {
  }
  try {
    const VlanEgressMap map = parse_vlan_egress_command(command);
    vlan_state_.insert_or_assign(map.interface, map);
  } catch (const std::exception&) {
  }
}

void DryRunBackend::write_file(const std::string& path, const std::string& contents) {
  files_.insert_or_assign(path, contents);
}

void DryRunBackend::make_dir(const std::string& path) { dirs_.push_back(path); }

void DryRunBackend::migrate_tasks(const std::string& from_tasks,
                                  const std::string& to_tasks) {
  migrations_.emplace_back(from_tasks, to_tasks);
}

void DryRunBackend::set_irq_thread_priority(int irq, int priority) {
  thread_priorities_.emplace_back(irq, priority);
}

void DryRunBackend::probe_sched(const RtSchedParams& params) {
  probes_.push_back(params);
}

std::optional<std::string> DryRunBackend::read_file(const std::string& path) {
  if (auto it = files_.find(path); it != files_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::string> DryRunBackend::read_command_output(
    const std::string& command) {
  if (auto it = primed_commands_.find(command); it != primed_commands_.end()) {
    return it->second;
  }
  constexpr const char* kQdiscShow = "tc -g qdisc show dev ";
  constexpr const char* kLinkShow = "ip -d link show ";
  if (command.rfind(kQdiscShow, 0) == 0) {
    const std::string device = command.substr(std::string(kQdiscShow).size());
    if (auto it = qdisc_state_.find(device); it != qdisc_state_.end()) {
      return render_qdisc_show(it->second);
    }
  }
  if (command.rfind(kLinkShow, 0) == 0) {
    const std::string iface = command.substr(std::string(kLinkShow).size());
    if (auto it = vlan_state_.find(iface); it != vlan_state_.end()) {
      return render_vlan_show(it->second);
    }
  }
  return std::nullopt;
}

void DryRunBackend::prime_file(const std::string& path, const std::string& contents) {
  files_.insert_or_assign(path, contents);
}

void DryRunBackend::prime_command(const std::string& command,
                                  const std::string& output) {
  primed_commands_.insert_or_assign(command, output);
}

// --- live backend ----------------------------------------------------------------

namespace {

int default_runner(const std::string& command, std::string& output) {
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  output.clear();
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) {
    output.append(buf, n);
  }
  const int status = pclose(pipe);
  return status;
}

}  // namespace

LiveBackend::LiveBackend(BackendPaths paths, CommandRunner runner)
    : paths_(std::move(paths)), runner_(runner ? std::move(runner) : default_runner) {}

void LiveBackend::run_command(const std::string& command) {
  std::string output;
  const int status = runner_(command, output);
  if (status != 0) {
    throw std::runtime_error("command failed (" + std::to_string(status) +
                             "): " + command + (output.empty() ? "" : ": " + strip(output)));
  }
}

void LiveBackend::write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << contents;
  out.flush();
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

void LiveBackend::make_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw std::runtime_error("mkdir " + path + ": " + ec.message());
}

void LiveBackend::migrate_tasks(const std::string& from_tasks,
                                const std::string& to_tasks) {
  std::ifstream in(from_tasks);
  if (!in) throw std::runtime_error("cannot read " + from_tasks);
  std::string pid;
  std::size_t moved = 0, attempted = 0;
  while (std::getline(in, pid)) {
    if (pid.empty()) continue;
    ++attempted;
    // One pid per open: the kernel interface takes a single pid per write,
    // and kernel threads refusing migration must not poison the rest.
    std::ofstream out(to_tasks, std::ios::app);
    if (!out) throw std::runtime_error("cannot open " + to_tasks);
    out << pid << "\n";
    out.flush();
    if (out) ++moved;
  }
  if (attempted > 0 && moved == 0) {
    throw std::runtime_error("no tasks could be migrated to " + to_tasks);
  }
}

void LiveBackend::set_irq_thread_priority(int irq, int priority) {
  // The handler thread is named "irq/<n>-<action>"; find it by comm prefix.
  const std::string prefix = "irq/" + std::to_string(irq) + "-";
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(paths_.proc_root, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.empty() || !std::isdigit(static_cast<unsigned char>(name[0]))) continue;
    std::ifstream comm(entry.path() / "comm");
    std::string thread_name;
    if (!comm || !std::getline(comm, thread_name)) continue;
    if (thread_name.rfind(prefix, 0) != 0) continue;
    sched_param sp{};
    sp.sched_priority = priority;
    const pid_t tid = static_cast<pid_t>(std::stol(name));
    if (sched_setscheduler(tid, SCHED_FIFO, &sp) != 0) {
      throw std::runtime_error("cannot set fifo " + std::to_string(priority) +
                               " on irq thread " + thread_name);
    }
    return;
  }
  throw std::runtime_error("no thread found for irq " + std::to_string(irq));
}

void LiveBackend::probe_sched(const RtSchedParams& params) {
  if (params.policy != RtSchedParams::Policy::fifo) return;
  std::exception_ptr failure;
  std::thread probe([&] {
    sched_param sp{};
    sp.sched_priority = params.priority;
    const int rc = pthread_setschedparam(pthread_self(), SCHED_FIFO, &sp);
    if (rc != 0) {
      failure = std::make_exception_ptr(CapabilityError(
          "cannot set SCHED_FIFO priority " + std::to_string(params.priority) +
          ": run as root, grant CAP_SYS_NICE, or raise RLIMIT_RTPRIO"));
      return;
    }
    sp.sched_priority = 0;
    pthread_setschedparam(pthread_self(), SCHED_OTHER, &sp);
  });
  probe.join();
  if (failure) std::rethrow_exception(failure);
}

std::optional<std::string> LiveBackend::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::optional<std::string> LiveBackend::read_command_output(const std::string& command) {
  std::string output;
  if (runner_(command, output) != 0) return std::nullopt;
  return output;
}

}  // namespace rtbench
