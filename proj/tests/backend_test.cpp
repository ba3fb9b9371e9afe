#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "rtbench/backend.hpp"
#include "rtbench/errors.hpp"
#include "test_util.hpp"

using namespace rtbench;
using rtbench::test::synthetic_inventory;
using rtbench::test::TempDir;

namespace {

BackendPaths sandbox_paths(const TempDir& dir) {
  BackendPaths paths;
  paths.irq_root = dir.file("irq");
  paths.cpuset_root = dir.file("cpuset");
  paths.proc_root = dir.file("proc");
  return paths;
}

TuningPlan isolation_plan() {
  return plan_for_mode(TuningMode::rt_isolation, synthetic_inventory(2));
}

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("paths can be overridden through the environment") {
  setenv("RTBENCH_IRQ_ROOT", "/tmp/fake-irq", 1);
  setenv("RTBENCH_CPUSET_ROOT", "/tmp/fake-cpuset", 1);
  const BackendPaths paths = BackendPaths::from_environment();
  CHECK(paths.irq_root == "/tmp/fake-irq");
  CHECK(paths.cpuset_root == "/tmp/fake-cpuset");
  CHECK(paths.proc_root == "/proc");  // untouched default
  unsetenv("RTBENCH_IRQ_ROOT");
  unsetenv("RTBENCH_CPUSET_ROOT");
  CHECK(paths.irq_affinity_file(40) == "/tmp/fake-irq/40/smp_affinity_list");
  CHECK(paths.cpuset_dir("rtbench-rt") == "/tmp/fake-cpuset/rtbench-rt");
}

TEST_CASE("an isolation plan compiles to the full ordered step list") {
  const BackendPaths paths;  // defaults are fine, nothing is executed
  const auto actions = plan_actions(isolation_plan(), paths);

  // qdisc, vlan, 1 RT-irq pin + its thread priority, 3 steered irqs,
  // 2 cpusets x (mkdir, cpus, mems), migration, sched probe.
  REQUIRE(actions.size() == 15);
  CHECK(actions[0].kind == ActionKind::run_command);
  CHECK(actions[0].group == "qdisc");
  CHECK(actions[0].target ==
        mqprio_command(PriorityMap::rt_three_class(), "eth1"));
  CHECK(actions[1].kind == ActionKind::run_command);
  CHECK(actions[1].group == "vlan");
  CHECK(actions[1].target == vlan_egress_command(VlanEgressMap::identity("eth1.2")));

  CHECK(actions[2].kind == ActionKind::write_file);
  CHECK(actions[2].target == paths.irq_affinity_file(40));
  CHECK(actions[2].payload == "1\n");
  CHECK(actions[3].kind == ActionKind::irq_thread_priority);
  CHECK(actions[3].target == "40");
  CHECK(actions[3].payload == std::to_string(kIrqThreadPriority));

  // Non-RT IRQs 41, 42 and 16 all steer to the housekeeping CPU 0.
  for (std::size_t i = 4; i <= 6; ++i) {
    CHECK(actions[i].kind == ActionKind::write_file);
    CHECK(actions[i].group == "irq:default");
    CHECK(actions[i].payload == "0\n");
  }
  CHECK(actions[4].target == paths.irq_affinity_file(41));
  CHECK(actions[5].target == paths.irq_affinity_file(42));
  CHECK(actions[6].target == paths.irq_affinity_file(16));

  CHECK(actions[7].kind == ActionKind::make_dir);
  CHECK(actions[7].target == paths.cpuset_dir(kSystemCpusetName));
  CHECK(actions[8].payload == "0\n");  // system cpuset gets the housekeeping CPU
  CHECK(actions[10].kind == ActionKind::make_dir);
  CHECK(actions[10].target == paths.cpuset_dir(kRtCpusetName));
  CHECK(actions[11].payload == "1\n");  // rt cpuset shields the RT CPU
  CHECK(actions[13].kind == ActionKind::migrate_tasks);
  CHECK(actions[14].kind == ActionKind::sched_probe);
  CHECK(actions[14].payload == "fifo:80");
}

TEST_CASE("a no-rt plan compiles to no steps at all") {
  const TuningPlan plan = plan_for_mode(TuningMode::no_rt, synthetic_inventory(2));
  CHECK(plan_actions(plan, BackendPaths{}).empty());
}

TEST_CASE("applying to the dry-run backend records every intent") {
  const BackendPaths paths;
  DryRunBackend dry;
  const ApplyReport report = apply(isolation_plan(), dry, paths);

  CHECK(report.dry_run);
  CHECK(report.all_ok());
  CHECK(report.count(StepOutcome::ok) == 15);
  CHECK(dry.commands().size() == 2);
  CHECK(dry.files().size() == 8);  // 4 irq affinity files + 2x(cpus, mems)
  CHECK(dry.dirs().size() == 2);
  REQUIRE(dry.migrations().size() == 1);
  CHECK(dry.migrations()[0].second == paths.cpuset_dir(kSystemCpusetName) + "/tasks");
  REQUIRE(dry.thread_priorities().size() == 1);
  CHECK(dry.thread_priorities()[0] == std::pair<int, int>{40, kIrqThreadPriority});
  REQUIRE(dry.probes().size() == 1);
  CHECK(dry.probes()[0] == RtSchedParams::fifo());
  CHECK(dry.files().at(paths.irq_affinity_file(40)) == "1\n");
}

TEST_CASE("dry-run apply then verify is fully consistent") {
  DryRunBackend dry;
  const TuningPlan plan = isolation_plan();
  const BackendPaths paths;
  REQUIRE(apply(plan, dry, paths).all_ok());
  const VerifyReport report = verify(plan, dry, paths);
  // qdisc + vlan + 1 RT irq + 3 steered irqs + 2 cpusets + sched probe
  CHECK(report.checks.size() == 9);
  CHECK(report.count(CheckStatus::match) == report.checks.size());
  CHECK(report.consistent());
}

TEST_CASE("the dry-run device model answers qdisc and vlan read-backs") {
  DryRunBackend dry;
  const PriorityMap map = PriorityMap::rt_three_class();
  dry.run_command(mqprio_command(map, "eth1"));
  dry.run_command(vlan_egress_command(VlanEgressMap::identity("eth1.2")));

  const auto qdisc = dry.read_command_output("tc -g qdisc show dev eth1");
  REQUIRE(qdisc.has_value());
  const auto parsed = parse_qdisc_show(*qdisc);
  REQUIRE(parsed.has_value());
  CHECK(*parsed == map);

  const auto link = dry.read_command_output("ip -d link show eth1.2");
  REQUIRE(link.has_value());
  const auto vlan = parse_vlan_show(*link);
  REQUIRE(vlan.has_value());
  CHECK(vlan->pcp_of_priority == VlanEgressMap::identity("eth1.2").pcp_of_priority);

  CHECK_FALSE(dry.read_command_output("tc -g qdisc show dev eth9").has_value());
  CHECK_FALSE(dry.read_file("/proc/irq/40/smp_affinity_list").has_value());
}

TEST_CASE("cpu lists are compared as sets, not strings") {
  TuningPlan plan = plan_for_mode(TuningMode::rt_affinities, synthetic_inventory(2));
  plan.irq_rules.front().cpus = CpuSet{0, 1};
  // Narrow the plan to the one irq check this test is about.
  plan.priority_map.reset();
  plan.vlan_map.reset();
  plan.sched.reset();
  const BackendPaths paths;
  DryRunBackend dry;
  // Same set, different spelling than the canonical "0-1".
  dry.prime_file(paths.irq_affinity_file(40), "1,0\n");
  const VerifyReport report = verify(plan, dry, paths);
  REQUIRE(report.checks.size() == 1);
  CHECK(report.checks[0].status == CheckStatus::match);
  CHECK(report.checks[0].actual == "0-1");
}

TEST_CASE("verify flags drifted state as a mismatch") {
  const TuningPlan plan = isolation_plan();
  const BackendPaths paths;
  DryRunBackend dry;
  REQUIRE(apply(plan, dry, paths).all_ok());
  dry.prime_file(paths.irq_affinity_file(41), "1\n");  // steered IRQ drifted back
  const VerifyReport report = verify(plan, dry, paths);
  CHECK_FALSE(report.consistent());
  CHECK(report.count(CheckStatus::mismatch) == 1);
  for (const auto& check : report.checks) {
    if (check.status == CheckStatus::mismatch) {
      CHECK(check.item == "irq 41 affinity");
      CHECK(check.expected == "0");
      CHECK(check.actual == "1");
    }
  }
}

TEST_CASE("unobservable state verifies as unknown, not as a mismatch") {
  TuningPlan plan = plan_for_mode(TuningMode::rt_affinities, synthetic_inventory(2));
  plan.priority_map.reset();
  plan.vlan_map.reset();
  plan.sched.reset();
  DryRunBackend dry;  // nothing applied, nothing primed
  const VerifyReport report = verify(plan, dry, BackendPaths{});
  REQUIRE(report.checks.size() == 1);
  CHECK(report.checks[0].status == CheckStatus::unknown);
  CHECK(report.consistent());  // unknown is not proof of drift
}

TEST_CASE("a failed step skips the rest of its group but not other groups") {
  TuningPlan plan;
  plan.mode = TuningMode::rt_normal;
  plan.device = "eth1";
  plan.priority_map = PriorityMap::rt_three_class();
  plan.tbf = TbfSpec{50'000'000, 6'250, 12'500};  // second step in group "qdisc"
  plan.vlan_map = VlanEgressMap::identity("eth1.2");

  // tc commands fail, ip commands succeed.
  LiveBackend backend(BackendPaths{}, [](const std::string& cmd, std::string& out) {
    out = "";
    return cmd.rfind("tc ", 0) == 0 ? 2 : 0;
  });
  const ApplyReport report = apply(plan, backend, BackendPaths{});
  REQUIRE(report.steps.size() == 3);
  CHECK(report.steps[0].outcome == StepOutcome::failed);
  CHECK(report.steps[1].outcome == StepOutcome::skipped);
  CHECK(report.steps[1].detail.find("skipped after") != std::string::npos);
  CHECK(report.steps[2].outcome == StepOutcome::ok);  // vlan group unaffected
  CHECK_FALSE(report.all_ok());
  CHECK(report.count(StepOutcome::failed) == 1);
  CHECK(report.count(StepOutcome::skipped) == 1);
  CHECK(report.count(StepOutcome::ok) == 1);
}

TEST_CASE("the live backend reports failing commands with their output") {
  LiveBackend backend(BackendPaths{}, [](const std::string&, std::string& out) {
    out = "RTNETLINK answers: Operation not permitted\n";
    return 2;
  });
  CHECK_THROWS_WITH_AS(backend.run_command("tc qdisc replace dev eth1 root"),
                       doctest::Contains("Operation not permitted"),
                       std::runtime_error);
  CHECK_FALSE(backend.read_command_output("tc qdisc show").has_value());
}

TEST_CASE("the live backend passes command output through on success") {
  LiveBackend backend(BackendPaths{}, [](const std::string& cmd, std::string& out) {
    out = "echo:" + cmd;
    return 0;
  });
  CHECK_NOTHROW(backend.run_command("true"));
  const auto out = backend.read_command_output("status");
  REQUIRE(out.has_value());
  CHECK(*out == "echo:status");
}

TEST_CASE("live file and directory operations hit the real filesystem") {
  TempDir dir("backend");
  const BackendPaths paths = sandbox_paths(dir);
  LiveBackend backend(paths, [](const std::string&, std::string&) { return 0; });

  backend.make_dir(paths.cpuset_dir(kRtCpusetName));
  backend.write_file(paths.cpuset_dir(kRtCpusetName) + "/cpuset.cpus", "1\n");
  const auto read = backend.read_file(paths.cpuset_dir(kRtCpusetName) + "/cpuset.cpus");
  REQUIRE(read.has_value());
  CHECK(*read == "1\n");

  CHECK_FALSE(backend.read_file(dir.file("missing")).has_value());
  CHECK_THROWS_AS(backend.write_file(dir.file("no/such/dir/file"), "x"),
                  std::runtime_error);
}

TEST_CASE("task migration copies every pid, one write per pid") {
  TempDir dir("backend");
  LiveBackend backend(sandbox_paths(dir), nullptr);
  dir.write("root_tasks", "101\n102\n103\n");
  dir.write("dest_tasks", "");
  backend.migrate_tasks(dir.file("root_tasks"), dir.file("dest_tasks"));
  std::ifstream in(dir.file("dest_tasks"));
  std::string line;
  std::vector<std::string> moved;
  while (std::getline(in, line)) moved.push_back(line);
  CHECK(moved == std::vector<std::string>{"101", "102", "103"});
  CHECK_THROWS_AS(backend.migrate_tasks(dir.file("absent"), dir.file("dest_tasks")),
                  std::runtime_error);
}

TEST_CASE("irq thread priority fails cleanly when no handler thread exists") {
  TempDir dir("backend");
  const BackendPaths paths = sandbox_paths(dir);
  // Fake proc with one unrelated process entry.
  dir.write("proc/321/comm", "bash\n");
  LiveBackend backend(paths, nullptr);
  CHECK_THROWS_WITH_AS(backend.set_irq_thread_priority(40, 85),
                       doctest::Contains("no thread found"), std::runtime_error);
}

}  // TEST_SUITE
