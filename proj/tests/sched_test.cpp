#include <doctest.h>

#include <random>
#include <stdexcept>
#include <thread>

#include "rtbench/errors.hpp"
#include "rtbench/sched.hpp"

using namespace rtbench;

TEST_SUITE("sched") {

TEST_CASE("cpu sets are stored sorted and deduplicated") {
  const CpuSet s{3, 0, 2, 0, 3};
  CHECK(s.cpus() == std::vector<int>{0, 2, 3});
  CHECK(s.size() == 3);
  CHECK(s.contains(2));
  CHECK_FALSE(s.contains(1));
}

TEST_CASE("cpu list formatting collapses runs into ranges") {
  CHECK(CpuSet{}.to_list_string() == "");
  CHECK(CpuSet{5}.to_list_string() == "5");
  CHECK(CpuSet{0, 1, 2, 3}.to_list_string() == "0-3");
  CHECK(CpuSet{0, 2, 3}.to_list_string() == "0,2-3");
  CHECK(CpuSet{0, 2, 4, 6}.to_list_string() == "0,2,4,6");
  CHECK(CpuSet{1, 2, 4, 5, 6, 9}.to_list_string() == "1-2,4-6,9");
}

TEST_CASE("cpu list parsing accepts kernel syntax") {
  CHECK(CpuSet::parse("") == CpuSet{});
  CHECK(CpuSet::parse("1") == CpuSet{1});
  CHECK(CpuSet::parse("0,2-3") == (CpuSet{0, 2, 3}));
  CHECK(CpuSet::parse("2-2") == CpuSet{2});
  CHECK(CpuSet::parse("3,1,0") == (CpuSet{0, 1, 3}));
}

TEST_CASE("parse and format are inverse on random sets") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> cpu(0, 63);
  std::uniform_int_distribution<int> count(1, 16);
  for (int round = 0; round < 200; ++round) {
    std::vector<int> picks;
    for (int i = 0, n = count(rng); i < n; ++i) picks.push_back(cpu(rng));
    const CpuSet original(picks);
    CHECK(CpuSet::parse(original.to_list_string()) == original);
  }
}

TEST_CASE("cpu list parsing rejects malformed input") {
  CHECK_THROWS_AS(CpuSet::parse("a"), UsageError);
  CHECK_THROWS_AS(CpuSet::parse("1x"), UsageError);
  CHECK_THROWS_AS(CpuSet::parse("1-"), UsageError);
  CHECK_THROWS_AS(CpuSet::parse("3-1"), UsageError);
  CHECK_THROWS_AS(CpuSet::parse("-1"), UsageError);
  // Empty tokens (stray or trailing commas) are tolerated, not errors.
  CHECK(CpuSet::parse("1,,2") == (CpuSet{1, 2}));
  CHECK(CpuSet::parse("0,") == CpuSet{0});
}

TEST_CASE("intersects detects shared cpus") {
  CHECK((CpuSet{0, 1}).intersects(CpuSet{1, 2}));
  CHECK_FALSE((CpuSet{0, 1}).intersects(CpuSet{2, 3}));
  CHECK_FALSE(CpuSet{}.intersects(CpuSet{0}));
}

TEST_CASE("sched params validate priority against policy") {
  CHECK_NOTHROW(RtSchedParams{}.validate());
  CHECK_NOTHROW(RtSchedParams::fifo(1).validate());
  CHECK_NOTHROW(RtSchedParams::fifo(99).validate());
  CHECK_THROWS_AS(RtSchedParams::fifo(0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(RtSchedParams::fifo(100).validate(), std::invalid_argument);
  RtSchedParams other_with_priority;
  other_with_priority.priority = 5;
  CHECK_THROWS_AS(other_with_priority.validate(), std::invalid_argument);
}

TEST_CASE("policy names render for reports") {
  CHECK(std::string(to_string(RtSchedParams::Policy::other)) == "other");
  CHECK(std::string(to_string(RtSchedParams::Policy::fifo)) == "fifo");
}

// The RT syscall wrappers run on scratch threads so a refusal or a priority
// change never leaks into the test runner's main thread. Results are captured
// into locals and asserted after join: either the host grants RT scheduling
// and the effect is observable, or it refuses with a CapabilityError naming
// the privilege — silent fallback is the one unacceptable outcome.
TEST_CASE("fifo params apply to a thread or fail as a capability error") {
  std::exception_ptr error;
  SchedSnapshot seen{};
  std::thread worker([&] {
    try {
      apply_sched_params(RtSchedParams::fifo(42, /*lock_memory=*/false));
      seen = current_sched();
    } catch (...) {
      error = std::current_exception();
    }
  });
  worker.join();
  if (error) {
    CHECK_THROWS_AS(std::rethrow_exception(error), CapabilityError);
  } else {
    CHECK(seen.priority == 42);
  }
}

TEST_CASE("snapshot and restore bracket a priority change") {
  bool applied = false;
  SchedSnapshot before{}, after{};
  std::exception_ptr error;
  std::thread worker([&] {
    before = current_sched();
    try {
      apply_sched_params(RtSchedParams::fifo(30, /*lock_memory=*/false));
      applied = true;
    } catch (const CapabilityError&) {
      return;  // nothing changed, nothing to restore
    } catch (...) {
      error = std::current_exception();
      return;
    }
    restore_sched(before);
    after = current_sched();
  });
  worker.join();
  REQUIRE_FALSE(error);
  if (applied) {
    CHECK(after.policy == before.policy);
    CHECK(after.priority == before.priority);
  }
}

TEST_CASE("set_normal_sched drops a fifo thread back to priority zero") {
  bool applied = false;
  SchedSnapshot final_state{0, 99};
  std::thread worker([&] {
    try {
      apply_sched_params(RtSchedParams::fifo(30, /*lock_memory=*/false));
      applied = true;
    } catch (const CapabilityError&) {
      return;
    }
    set_normal_sched();
    final_state = current_sched();
  });
  worker.join();
  if (applied) CHECK(final_state.priority == 0);
}

TEST_CASE("current affinity round-trips through set_cpu_affinity") {
  const CpuSet original = current_cpu_affinity();
  REQUIRE_FALSE(original.empty());
  set_cpu_affinity(original);
  CHECK(current_cpu_affinity() == original);
}

TEST_CASE("pinning to a single online cpu takes effect") {
  const CpuSet original = current_cpu_affinity();
  const CpuSet single{original.cpus().front()};
  set_cpu_affinity(single);
  CHECK(current_cpu_affinity() == single);
  set_cpu_affinity(original);
}

TEST_CASE("joining a nonexistent cpuset reports a capability error") {
  CHECK_THROWS_AS(join_cpuset("/nonexistent/cpuset/dir"), CapabilityError);
}

}  // TEST_SUITE
