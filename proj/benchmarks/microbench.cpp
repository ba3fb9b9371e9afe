// Microbenchmarks for the operations on the measurement hot path. Everything
// here runs once per cycle (or per datagram), so regressions show up directly
// as scheduling jitter in real runs.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "rtbench/probe.hpp"
#include "rtbench/stats.hpp"
#include "rtbench/time.hpp"
#include "rtbench/tuning.hpp"

namespace {

using namespace rtbench;

void BM_ProbeEncode(benchmark::State& state) {
  std::vector<std::uint8_t> buf(kDefaultPayloadSize);
  std::uint64_t seq = 0;
  for (auto _ : state) {
    encode_probe({seq, seq * kNanosPerMilli}, buf);
    benchmark::DoNotOptimize(buf.data());
    ++seq;
  }
}
BENCHMARK(BM_ProbeEncode);

void BM_ProbeDecode(benchmark::State& state) {
  std::vector<std::uint8_t> buf(kDefaultPayloadSize);
  encode_probe({42, 123456789}, buf);
  ProbePacket out;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_probe(buf, out));
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ProbeDecode);

void BM_AccumulatorRecord(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> rtt(10 * kNanosPerMicro,
                                                   2 * kNanosPerMilli);
  std::vector<RoundTripSample> samples(4096);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    samples[n].sequence = n;
    samples[n].t_send = Timestamp{n * kNanosPerMilli};
    samples[n].rtt_ns = rtt(rng);
    samples[n].t_recv = Timestamp{samples[n].t_send.ns + samples[n].rtt_ns};
    samples[n].status = SampleStatus::ok;
  }
  RunAccumulator acc(kNanosPerMilli);
  std::size_t i = 0;
  for (auto _ : state) {
    acc.record(samples[i++ & 4095]);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_AccumulatorRecord);

void BM_HistogramAdd(benchmark::State& state) {
  LatencyHistogram histogram;
  std::uint64_t rtt = 17 * kNanosPerMicro;
  for (auto _ : state) {
    histogram.add(rtt);
    rtt = (rtt + 131 * kNanosPerMicro) % (90 * kNanosPerMilli);
    benchmark::DoNotOptimize(histogram);
  }
}
BENCHMARK(BM_HistogramAdd);

void BM_Classify(benchmark::State& state) {
  const PriorityMap map = PriorityMap::rt_three_class();
  int priority = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.classify(priority));
    priority = (priority + 1) & 15;
  }
}
BENCHMARK(BM_Classify);

void BM_ScheduleTarget(benchmark::State& state) {
  CycleSpec spec;
  const CycleSchedule schedule(Timestamp{123456789}, spec);
  std::uint64_t n = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(schedule.target(n));
    n = (n + 1) % spec.cycle_count();
  }
}
BENCHMARK(BM_ScheduleTarget);

}  // namespace

BENCHMARK_MAIN();
