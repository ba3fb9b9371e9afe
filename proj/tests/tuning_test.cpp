#include <doctest.h>

#include <random>
#include <stdexcept>

#include "rtbench/errors.hpp"
#include "rtbench/tuning.hpp"
#include "test_util.hpp"

using namespace rtbench;
using rtbench::test::synthetic_inventory;

TEST_SUITE("tuning") {

TEST_CASE("mode names round-trip and unknown names are usage errors") {
  for (TuningMode m : {TuningMode::no_rt, TuningMode::rt_normal,
                       TuningMode::rt_affinities, TuningMode::rt_isolation}) {
    CHECK(parse_tuning_mode(to_string(m)) == m);
  }
  CHECK(std::string(to_string(TuningMode::no_rt)) == "no-rt");
  CHECK(std::string(to_string(TuningMode::rt_isolation)) == "rt-isolation");
  CHECK_THROWS_AS(parse_tuning_mode("turbo"), UsageError);
}

TEST_CASE("the three-class priority map has the documented layout") {
  const PriorityMap map = PriorityMap::rt_three_class();
  CHECK(map.num_tc() == 3);
  const std::array<int, 16> want{2, 2, 1, 1, 0, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2};
  CHECK(map.entries() == want);
  REQUIRE(map.queue_layout().size() == 3);
  CHECK(map.queue_layout()[0] == (QueueSpan{1, 0}));
  CHECK(map.queue_layout()[1] == (QueueSpan{1, 1}));
  CHECK(map.queue_layout()[2] == (QueueSpan{1, 2}));
}

TEST_CASE("classification sends the RT mark to class 0, queue 0") {
  const PriorityMap map = PriorityMap::rt_three_class();
  CHECK(map.classify(kRtPriorityMark) == (PriorityMap::ClassAssignment{0, 0}));
  CHECK(map.classify(2) == (PriorityMap::ClassAssignment{1, 1}));
  CHECK(map.classify(3) == (PriorityMap::ClassAssignment{1, 1}));
  for (int p : {0, 1, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}) {
    CHECK(map.classify(p) == (PriorityMap::ClassAssignment{2, 2}));
  }
}

TEST_CASE("classification agrees with the raw map for arbitrary layouts") {
  // Oracle: the class is map[p] by definition, the queue is that class's
  // span offset. Check a two-class layout with a wide span.
  const PriorityMap map({0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2,
                        {{2, 0}, {3, 2}});
  for (int p = 0; p < kSkbPriorityLevels; ++p) {
    const auto got = map.classify(p);
    CHECK(got.traffic_class == map.entries()[static_cast<std::size_t>(p)]);
    CHECK(got.queue ==
          map.queue_layout()[static_cast<std::size_t>(got.traffic_class)].offset);
  }
}

TEST_CASE("classification rejects priorities outside 0..15") {
  const PriorityMap map = PriorityMap::rt_three_class();
  CHECK_THROWS_AS(map.classify(-1), std::domain_error);
  CHECK_THROWS_AS(map.classify(16), std::domain_error);
}

TEST_CASE("priority map validation catches inconsistent layouts") {
  std::array<int, 16> flat{};
  CHECK_THROWS_AS(PriorityMap(flat, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(PriorityMap(flat, 17, {}), std::invalid_argument);
  // entry references class 1 but num_tc is 1
  std::array<int, 16> high{};
  high[3] = 1;
  CHECK_THROWS_AS(PriorityMap(high, 1, {{1, 0}}), std::invalid_argument);
  // one span missing
  CHECK_THROWS_AS(PriorityMap(flat, 2, {{1, 0}}), std::invalid_argument);
  // overlapping spans
  std::array<int, 16> two{};
  two[1] = 1;
  CHECK_THROWS_AS(PriorityMap(two, 2, {{2, 0}, {1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(PriorityMap(flat, 1, {{0, 0}}), std::invalid_argument);
}

TEST_CASE("the mqprio command renders the documented grammar") {
  CHECK(mqprio_command(PriorityMap::rt_three_class(), "eth1") ==
        "tc qdisc replace dev eth1 root mqprio num_tc 3 "
        "map 2 2 1 1 0 2 2 2 2 2 2 2 2 2 2 2 queues 1@0 1@1 1@2 hw 0");
}

TEST_CASE("mqprio parse inverts emit") {
  std::string device;
  const PriorityMap original = PriorityMap::rt_three_class();
  const PriorityMap parsed =
      parse_mqprio_command(mqprio_command(original, "eth1"), &device);
  CHECK(parsed == original);
  CHECK(device == "eth1");

  // And for randomized valid maps, with spans kept disjoint by construction.
  std::mt19937 rng(5);
  for (int round = 0; round < 100; ++round) {
    const int num_tc = std::uniform_int_distribution<int>(1, 4)(rng);
    std::array<int, 16> entries{};
    for (auto& e : entries) {
      e = std::uniform_int_distribution<int>(0, num_tc - 1)(rng);
    }
    std::vector<QueueSpan> spans;
    int offset = 0;
    for (int c = 0; c < num_tc; ++c) {
      const int count = std::uniform_int_distribution<int>(1, 3)(rng);
      spans.push_back({count, offset});
      offset += count;
    }
    const PriorityMap map(entries, num_tc, spans);
    CHECK(parse_mqprio_command(mqprio_command(map, "ens3")) == map);
  }
}

TEST_CASE("mqprio parse rejects mangled commands") {
  const std::string good = mqprio_command(PriorityMap::rt_three_class(), "eth1");
  CHECK_THROWS_AS(parse_mqprio_command("tc qdisc del dev eth1 root"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_mqprio_command(good + " extra"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mqprio_command(good.substr(0, good.size() - 5)),
                  std::invalid_argument);
}

TEST_CASE("the vlan egress command renders the identity mapping") {
  CHECK(vlan_egress_command(VlanEgressMap::identity("eth1.2")) ==
        "ip link set eth1.2 type vlan egress 0:0 1:1 2:2 3:3 4:4 5:5 6:6 7:7");
}

TEST_CASE("vlan egress parse inverts emit") {
  VlanEgressMap map = VlanEgressMap::identity("eno1.7");
  map.pcp_of_priority = {7, 6, 5, 4, 3, 2, 1, 0};
  CHECK(parse_vlan_egress_command(vlan_egress_command(map)) == map);
  CHECK_THROWS_AS(parse_vlan_egress_command("ip link set eth1.2 type vlan"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      parse_vlan_egress_command(
          "ip link set eth1.2 type vlan egress 1:1 0:0 2:2 3:3 4:4 5:5 6:6 7:7"),
      std::invalid_argument);
}

TEST_CASE("vlan maps validate interface and pcp range") {
  VlanEgressMap map = VlanEgressMap::identity("eth1.2");
  CHECK_NOTHROW(map.validate());
  map.pcp_of_priority[3] = 8;
  CHECK_THROWS_AS(map.validate(), std::invalid_argument);
  VlanEgressMap unnamed;
  CHECK_THROWS_AS(unnamed.validate(), std::invalid_argument);
}

TEST_CASE("the shaper command attaches to the chosen class queue") {
  TbfSpec tbf{100'000'000, 12'500, 25'000};
  CHECK(tbf_command(tbf, "eth1", 2) ==
        "tc qdisc replace dev eth1 parent 8001:3 tbf rate 100000000bit "
        "burst 12500 limit 25000");
  CHECK_THROWS_AS(tbf_command(TbfSpec{}, "eth1", 0), std::invalid_argument);
}

TEST_CASE("qdisc read-back rendering parses back to the same map") {
  const PriorityMap map = PriorityMap::rt_three_class();
  const auto parsed = parse_qdisc_show(render_qdisc_show(map));
  REQUIRE(parsed.has_value());
  CHECK(*parsed == map);
  CHECK_FALSE(parse_qdisc_show("qdisc noqueue 0: root").has_value());
  CHECK_FALSE(parse_qdisc_show("").has_value());
}

TEST_CASE("qdisc read-back lists one child per queue, highest handle first") {
  const std::string shown = render_qdisc_show(PriorityMap::rt_three_class());
  const auto pos3 = shown.find("parent 8001:3");
  const auto pos2 = shown.find("parent 8001:2");
  const auto pos1 = shown.find("parent 8001:1");
  REQUIRE(pos3 != std::string::npos);
  REQUIRE(pos2 != std::string::npos);
  REQUIRE(pos1 != std::string::npos);
  CHECK(pos3 < pos2);
  CHECK(pos2 < pos1);
  CHECK(shown.find("pfifo_fast") != std::string::npos);
}

TEST_CASE("vlan read-back rendering parses back to the same map") {
  VlanEgressMap map = VlanEgressMap::identity("eth1.2");
  map.pcp_of_priority[5] = 0;
  const auto parsed = parse_vlan_show(render_vlan_show(map));
  REQUIRE(parsed.has_value());
  CHECK(*parsed == map);
  CHECK_FALSE(parse_vlan_show("eth1.2: no qos map").has_value());
}

TEST_CASE("no-rt plans carry only the marking") {
  const TuningPlan plan = plan_for_mode(TuningMode::no_rt, synthetic_inventory(4));
  CHECK(plan.mode == TuningMode::no_rt);
  CHECK(plan.device == "eth1");
  CHECK(plan.priority_mark == kRtPriorityMark);
  CHECK_FALSE(plan.priority_map.has_value());
  CHECK_FALSE(plan.vlan_map.has_value());
  CHECK_FALSE(plan.sched.has_value());
  CHECK_FALSE(plan.app_cpus.has_value());
  CHECK(plan.irq_rules.empty());
  CHECK_FALSE(plan.isolation.has_value());
}

TEST_CASE("rt-normal plans add qdisc, vlan map and fifo scheduling") {
  const TuningPlan plan =
      plan_for_mode(TuningMode::rt_normal, synthetic_inventory(4));
  REQUIRE(plan.priority_map.has_value());
  CHECK(*plan.priority_map == PriorityMap::rt_three_class());
  REQUIRE(plan.vlan_map.has_value());
  CHECK(plan.vlan_map->interface == "eth1.2");
  CHECK(*plan.vlan_map == VlanEgressMap::identity("eth1.2"));
  REQUIRE(plan.sched.has_value());
  CHECK(plan.sched->policy == RtSchedParams::Policy::fifo);
  CHECK(plan.sched->priority == 80);
  CHECK(plan.sched->lock_memory);
  CHECK_FALSE(plan.app_cpus.has_value());
  CHECK(plan.irq_rules.empty());
}

TEST_CASE("rt-affinities plans pin the app and the RT queue IRQ together") {
  const TuningPlan plan =
      plan_for_mode(TuningMode::rt_affinities, synthetic_inventory(4));
  REQUIRE(plan.app_cpus.has_value());
  CHECK(*plan.app_cpus == CpuSet{1});  // second online CPU by default
  REQUIRE(plan.irq_rules.size() == 1);
  const IrqAffinityRule& rule = plan.irq_rules.front();
  CHECK(rule.match == "eth1-tx-0");
  CHECK(rule.irqs == std::vector<int>{40});
  CHECK(rule.cpus == CpuSet{1});
  CHECK(rule.thread_priority == kIrqThreadPriority);
  CHECK_FALSE(plan.isolation.has_value());
}

TEST_CASE("rt-isolation plans shield the RT cpu and steer the other irqs") {
  const TuningPlan plan =
      plan_for_mode(TuningMode::rt_isolation, synthetic_inventory(4));
  REQUIRE(plan.isolation.has_value());
  const CpuIsolationPlan& iso = *plan.isolation;
  CHECK(iso.isolated == CpuSet{1});
  CHECK(iso.irq_default == (CpuSet{0, 2, 3}));
  CHECK(iso.migrate_existing_tasks);
  CHECK_FALSE(iso.isolated.intersects(iso.irq_default));
  // Everything except the RT queue's IRQ 40 is steered away.
  CHECK(iso.non_rt_irqs == std::vector<int>{41, 42, 16});
}

TEST_CASE("each mode's plan strictly extends the previous one") {
  const SystemInventory inv = synthetic_inventory(4);
  const TuningPlan base = plan_for_mode(TuningMode::no_rt, inv);
  const TuningPlan normal = plan_for_mode(TuningMode::rt_normal, inv);
  const TuningPlan pinned = plan_for_mode(TuningMode::rt_affinities, inv);
  const TuningPlan isolated = plan_for_mode(TuningMode::rt_isolation, inv);

  CHECK(base.device == normal.device);
  CHECK(normal.priority_map == pinned.priority_map);
  CHECK(normal.vlan_map == pinned.vlan_map);
  CHECK(normal.sched == pinned.sched);
  CHECK(pinned.app_cpus == isolated.app_cpus);
  CHECK(pinned.irq_rules == isolated.irq_rules);
  CHECK_FALSE(base.priority_map);
  CHECK(normal.priority_map);
  CHECK_FALSE(normal.app_cpus);
  CHECK(pinned.app_cpus);
  CHECK_FALSE(pinned.isolation);
  CHECK(isolated.isolation);
}

TEST_CASE("affinity modes refuse a single-cpu inventory") {
  const SystemInventory one = synthetic_inventory(1);
  CHECK_NOTHROW(plan_for_mode(TuningMode::no_rt, one));
  CHECK_NOTHROW(plan_for_mode(TuningMode::rt_normal, one));
  CHECK_THROWS_AS(plan_for_mode(TuningMode::rt_affinities, one), CapabilityError);
  CHECK_THROWS_AS(plan_for_mode(TuningMode::rt_isolation, one), CapabilityError);
}

TEST_CASE("plan options override device, vlan interface, pattern and cpu") {
  PlanOptions opts;
  opts.device = "ens3";
  opts.vlan_interface = "ens3.7";
  opts.rt_queue_irq_pattern = "eth1-tx-1";
  opts.rt_cpu = 3;
  opts.priority_mark = 6;
  const TuningPlan plan =
      plan_for_mode(TuningMode::rt_isolation, synthetic_inventory(4), opts);
  CHECK(plan.device == "ens3");
  CHECK(plan.priority_mark == 6);
  CHECK(plan.vlan_map->interface == "ens3.7");
  CHECK(*plan.app_cpus == CpuSet{3});
  CHECK(plan.irq_rules.front().match == "eth1-tx-1");
  CHECK(plan.irq_rules.front().irqs == std::vector<int>{41});
  CHECK(plan.isolation->isolated == CpuSet{3});
  CHECK(plan.isolation->irq_default == (CpuSet{0, 1, 2}));
}

TEST_CASE("an offline rt cpu request is a capability error") {
  PlanOptions opts;
  opts.rt_cpu = 9;
  CHECK_THROWS_AS(
      plan_for_mode(TuningMode::rt_affinities, synthetic_inventory(2), opts),
      CapabilityError);
}

TEST_CASE("plans survive a json round trip for every mode") {
  const SystemInventory inv = synthetic_inventory(4);
  for (TuningMode m : {TuningMode::no_rt, TuningMode::rt_normal,
                       TuningMode::rt_affinities, TuningMode::rt_isolation}) {
    TuningPlan plan = plan_for_mode(m, inv);
    if (m == TuningMode::rt_normal) {
      plan.tbf = TbfSpec{50'000'000, 6'250, 12'500};  // exercise the shaper field
    }
    CHECK(TuningPlan::from_json(plan.to_json()) == plan);
  }
}

TEST_CASE("invalid plan json is a record error") {
  CHECK_THROWS_AS(TuningPlan::from_json("not json"), RecordError);
  CHECK_THROWS_AS(TuningPlan::from_json("{}"), RecordError);
  CHECK_THROWS_AS(TuningPlan::from_json(R"({"mode":"turbo"})"), RecordError);
  // Structurally valid but semantically inconsistent: isolation overlaps.
  CHECK_THROWS_AS(TuningPlan::from_json(R"({
    "mode": "rt-isolation",
    "irq_rules": [{"match": "x", "irqs": [1], "cpus": "1"}],
    "isolation": {"isolated": "1", "irq_default": "1", "non_rt_irqs": []}
  })"),
                  RecordError);
}

TEST_CASE("plan validation enforces cross-field rules") {
  TuningPlan plan;
  plan.priority_mark = 16;
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan.priority_mark = 4;
  plan.sched = RtSchedParams::fifo();
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);  // no-rt with fifo
  plan.mode = TuningMode::rt_affinities;
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);  // no irq rules
}

}  // TEST_SUITE
