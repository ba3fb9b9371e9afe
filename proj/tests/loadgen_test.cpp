#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <stdexcept>
#include <thread>

#include "rtbench/errors.hpp"
#include "rtbench/loadgen.hpp"
#include "test_util.hpp"

using namespace rtbench;
using rtbench::test::TempDir;

TEST_SUITE("loadgen") {

TEST_CASE("size literals use binary suffixes") {
  CHECK(parse_size_literal("512") == 512);
  CHECK(parse_size_literal("4k") == 4096);
  CHECK(parse_size_literal("4K") == 4096);
  CHECK(parse_size_literal("128M") == 128ull << 20);
  CHECK(parse_size_literal("2G") == 2ull << 30);
  CHECK_THROWS_AS(parse_size_literal(""), UsageError);
  CHECK_THROWS_AS(parse_size_literal("12Q"), UsageError);
  CHECK_THROWS_AS(parse_size_literal("M"), UsageError);
  CHECK_THROWS_AS(parse_size_literal("1.5M"), UsageError);
}

TEST_CASE("bandwidth literals use decimal suffixes") {
  CHECK(parse_bandwidth_literal("9600") == 9600);
  CHECK(parse_bandwidth_literal("100k") == 100'000);
  CHECK(parse_bandwidth_literal("100M") == 100'000'000);
  CHECK(parse_bandwidth_literal("1G") == 1'000'000'000);
  CHECK_THROWS_AS(parse_bandwidth_literal("fast"), UsageError);
}

TEST_CASE("duration literals accept seconds, minutes and hours") {
  CHECK(parse_duration_literal("30") == 30 * kNanosPerSecond);
  CHECK(parse_duration_literal("30s") == 30 * kNanosPerSecond);
  CHECK(parse_duration_literal("2m") == 120 * kNanosPerSecond);
  CHECK(parse_duration_literal("1h") == 3600 * kNanosPerSecond);
  CHECK(parse_duration_literal("0") == 0);
  CHECK_THROWS_AS(parse_duration_literal("soon"), UsageError);
  CHECK_THROWS_AS(parse_duration_literal(""), UsageError);
}

TEST_CASE("stress flag parsing mirrors the familiar tool syntax") {
  const StressSpec spec = parse_stress_args(
      {"-c", "4", "-i", "2", "-m", "1", "--vm-bytes", "128M", "-d", "1",
       "--hdd-bytes", "1G", "-t", "30s"});
  CHECK(spec.cpu_workers == 4);
  CHECK(spec.io_workers == 2);
  CHECK(spec.vm_workers == 1);
  CHECK(spec.vm_bytes == 128ull << 20);
  CHECK(spec.disk_workers == 1);
  CHECK(spec.disk_bytes == 1ull << 30);
  CHECK(spec.duration_ns == 30 * kNanosPerSecond);

  const StressSpec long_form =
      parse_stress_args({"--cpu", "2", "--io", "1", "--timeout", "5"});
  CHECK(long_form.cpu_workers == 2);
  CHECK(long_form.io_workers == 1);
  CHECK(long_form.duration_ns == 5 * kNanosPerSecond);
}

TEST_CASE("stress flag parsing rejects bad input") {
  CHECK_THROWS_AS(parse_stress_args({"-c"}), UsageError);           // missing value
  CHECK_THROWS_AS(parse_stress_args({"-c", "x"}), UsageError);      // bad count
  CHECK_THROWS_AS(parse_stress_args({"-c", "-2"}), UsageError);     // negative
  CHECK_THROWS_AS(parse_stress_args({"--spin", "1"}), UsageError);  // unknown flag
  CHECK_THROWS_AS(parse_stress_args({}), std::invalid_argument);    // no workers
}

TEST_CASE("stress spec validation needs at least one worker") {
  StressSpec spec;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.cpu_workers = 1;
  CHECK_NOTHROW(spec.validate());
  spec.io_workers = -1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("a short cpu stress run spins every worker") {
  StressSpec spec;
  spec.cpu_workers = 2;
  spec.duration_ns = 100 * kNanosPerMilli;
  const StressReport report = run_stress(spec);
  CHECK(report.all_ok());
  REQUIRE(report.workers.size() == 2);
  for (const auto& w : report.workers) {
    CHECK(w.kind == "cpu");
    CHECK(w.iterations > 0);
  }
  CHECK(report.duration_ns >= spec.duration_ns);
}

TEST_CASE("io and disk workers churn real files in the work dir and clean up") {
  TempDir dir("loadgen");
  StressSpec spec;
  spec.io_workers = 1;
  spec.disk_workers = 1;
  spec.disk_bytes = 256 * 1024;  // small passes so iterations accumulate
  spec.work_dir = dir.path();
  spec.duration_ns = 200 * kNanosPerMilli;
  const StressReport report = run_stress(spec);
  CHECK(report.all_ok());
  std::uint64_t io_iters = 0, hdd_iters = 0;
  for (const auto& w : report.workers) {
    if (w.kind == "io") io_iters = w.iterations;
    if (w.kind == "hdd") hdd_iters = w.iterations;
  }
  CHECK(io_iters > 0);
  CHECK(hdd_iters > 0);
  // Scratch files are unlinked on the way out.
  CHECK(std::filesystem::directory_iterator(dir.path()) ==
        std::filesystem::directory_iterator{});
}

TEST_CASE("vm workers walk their arena") {
  StressSpec spec;
  spec.vm_workers = 1;
  spec.vm_bytes = 4 * 1024 * 1024;
  spec.duration_ns = 100 * kNanosPerMilli;
  const StressReport report = run_stress(spec);
  CHECK(report.all_ok());
  CHECK(report.workers[0].kind == "vm");
  CHECK(report.workers[0].iterations > 0);
}

TEST_CASE("an unbounded stress run obeys the stop flag") {
  StressSpec spec;
  spec.cpu_workers = 1;
  std::atomic<bool> stop{false};
  std::thread flipper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(80));
    stop.store(true);
  });
  const StressReport report = run_stress(spec, &stop);
  flipper.join();
  CHECK(report.all_ok());
  CHECK(report.duration_ns >= 50 * kNanosPerMilli);
}

TEST_CASE("an unbounded run without a stop flag is refused up front") {
  StressSpec spec;
  spec.cpu_workers = 1;
  CHECK_THROWS_AS(run_stress(spec, nullptr), std::invalid_argument);
  TrafficSpec traffic;
  traffic.destination = Endpoint{"127.0.0.1", 9};
  CHECK_THROWS_AS(run_traffic(traffic, nullptr), std::invalid_argument);
}

TEST_CASE("traffic spec validation") {
  TrafficSpec spec;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // no destination
  spec.destination = Endpoint{"127.0.0.1", 9000};
  CHECK_NOTHROW(spec.validate());
  spec.payload_size = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.payload_size = 65508;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.payload_size = 1470;
  spec.target_bandwidth_bps = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("paced traffic hits its target rate into a local sink") {
  UdpSink sink(Endpoint{"127.0.0.1", 0});
  sink.bind();
  std::atomic<bool> sink_stop{false};
  std::thread sink_thread([&] { sink.run(sink_stop); });

  TrafficSpec spec;
  spec.target_bandwidth_bps = 20'000'000;  // 20 Mbit/s for 1 s
  spec.payload_size = 1200;
  spec.destination = Endpoint{"127.0.0.1", sink.port()};
  spec.duration_ns = kNanosPerSecond;
  const TrafficReport report = run_traffic(spec);

  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  sink_stop.store(true);
  sink_thread.join();

  CHECK(report.send_failures == 0);
  CHECK(report.packets_sent > 0);
  CHECK(report.bytes_sent == report.packets_sent * spec.payload_size);
  // Pacing tolerance: the sender must stay within 5% of the target.
  CHECK(report.achieved_bps() ==
        doctest::Approx(static_cast<double>(spec.target_bandwidth_bps)).epsilon(0.05));

  // The local sink saw (essentially) everything the sender put on loopback.
  const UdpSink::Report& seen = sink.report();
  CHECK(seen.packets > report.packets_sent * 9 / 10);
  CHECK(seen.bytes == seen.packets * spec.payload_size);
  REQUIRE_FALSE(seen.windows.empty());
  CHECK(seen.windows.front().index == 0);
}

TEST_CASE("sink windows aggregate packets per second with conserved totals") {
  UdpSink sink(Endpoint{"127.0.0.1", 0});
  sink.bind();
  std::atomic<bool> stop{false};
  std::thread sink_thread([&] { sink.run(stop); });

  UdpSocket sender;
  sender.bind(Endpoint{"127.0.0.1", 0});
  sender.connect(Endpoint{"127.0.0.1", sink.port()});
  std::vector<std::uint8_t> payload(100, 0xAB);
  for (int i = 0; i < 50; ++i) sender.send(payload);

  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  stop.store(true);
  sink_thread.join();

  const UdpSink::Report& report = sink.report();
  CHECK(report.packets == 50);
  CHECK(report.bytes == 5000);
  std::uint64_t window_bytes = 0, window_packets = 0;
  for (const auto& w : report.windows) {
    window_bytes += w.bytes;
    window_packets += w.packets;
  }
  CHECK(window_bytes == report.bytes);
  CHECK(window_packets == report.packets);
}

}  // TEST_SUITE
