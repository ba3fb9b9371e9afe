#include <doctest.h>

#include <random>
#include <stdexcept>

#include "rtbench/matcher.hpp"

using namespace rtbench;

namespace {

constexpr std::uint64_t kPeriod = kNanosPerMilli;
using Outcome = ReplyMatcher::ReplyOutcome;

ReplyMatcher::Config config(std::uint64_t horizon = 4) {
  ReplyMatcher::Config cfg;
  cfg.period_ns = kPeriod;
  cfg.deadline_ns = kPeriod;
  cfg.loss_horizon_periods = horizon;
  return cfg;
}

Timestamp at(std::uint64_t ns) { return Timestamp{1'000'000'000 + ns}; }

}  // namespace

TEST_SUITE("matcher") {

TEST_CASE("reply within the deadline completes the sample as ok") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  CHECK(m.on_reply(0, at(300 * kNanosPerMicro)) == Outcome::matched_ok);
  const auto& s = m.samples()[0];
  CHECK(s.status == SampleStatus::ok);
  CHECK(s.rtt_ns == 300 * kNanosPerMicro);
  CHECK(s.t_recv == at(300 * kNanosPerMicro));
}

TEST_CASE("reply after the deadline is late_arrival, received and missed") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  CHECK(m.on_reply(0, at(2 * kPeriod)) == Outcome::matched_late);
  CHECK(m.samples()[0].status == SampleStatus::late_arrival);
  CHECK(m.samples()[0].rtt_ns == 2 * kPeriod);
  CHECK(m.samples()[0].received());
}

TEST_CASE("rtt is exactly t_recv minus t_send") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(123), false);
  m.on_reply(0, at(123 + 456'789));
  CHECK(m.samples()[0].rtt_ns == 456'789);
}

TEST_CASE("rtt exactly at the deadline still counts as ok") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  CHECK(m.on_reply(0, at(kPeriod)) == Outcome::matched_ok);
}

TEST_CASE("no reply within the horizon marks the sample lost") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  m.advance(at(4 * kPeriod - 1));
  CHECK(m.samples()[0].status == SampleStatus::pending);
  m.advance(at(4 * kPeriod));
  CHECK(m.samples()[0].status == SampleStatus::lost);
}

TEST_CASE("unreplied overrun cycles finalize as send_overrun, not lost") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), /*overrun=*/true);
  m.on_send(1, at(kPeriod), false);
  m.advance(at(10 * kPeriod));
  CHECK(m.samples()[0].status == SampleStatus::send_overrun);
  CHECK(m.samples()[0].overrun);
  CHECK_FALSE(m.samples()[0].received());
  CHECK(m.samples()[1].status == SampleStatus::lost);
}

TEST_CASE("a replied overrun cycle keeps its flag but completes normally") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), /*overrun=*/true);
  m.on_reply(0, at(100));
  CHECK(m.samples()[0].status == SampleStatus::ok);
  CHECK(m.samples()[0].overrun);
}

TEST_CASE("duplicate replies count once and change nothing") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  m.on_reply(0, at(200));
  const auto first = m.samples()[0];
  CHECK(m.on_reply(0, at(900)) == Outcome::duplicate);
  CHECK(m.duplicates() == 1);
  CHECK(m.samples()[0] == first);
}

TEST_CASE("reply to a lost sample within retention is reclassified late") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  m.advance(at(5 * kPeriod));
  REQUIRE(m.samples()[0].status == SampleStatus::lost);
  // Retention runs two horizons from the send; 6 periods is inside it.
  CHECK(m.on_reply(0, at(6 * kPeriod)) == Outcome::reclassified_late);
  CHECK(m.samples()[0].status == SampleStatus::late_arrival);
  CHECK(m.samples()[0].rtt_ns == 6 * kPeriod);
  CHECK(m.stale_replies() == 0);
}

TEST_CASE("reply past the retention window is stale") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  m.advance(at(5 * kPeriod));
  CHECK(m.on_reply(0, at(9 * kPeriod)) == Outcome::stale);  // > 2 x 4 periods
  CHECK(m.stale_replies() == 1);
  CHECK(m.samples()[0].status == SampleStatus::lost);
}

TEST_CASE("a reply for a never-sent sequence is stale") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  CHECK(m.on_reply(77, at(100)) == Outcome::stale);
  CHECK(m.stale_replies() == 1);
}

TEST_CASE("finalize settles every pending sample") {
  ReplyMatcher m(3, config());
  m.on_send(0, at(0), false);
  m.on_send(1, at(kPeriod), true);
  m.on_send(2, at(2 * kPeriod), false);
  m.on_reply(0, at(kPeriod / 2));
  m.finalize();
  CHECK(m.samples()[0].status == SampleStatus::ok);
  CHECK(m.samples()[1].status == SampleStatus::send_overrun);
  CHECK(m.samples()[2].status == SampleStatus::lost);
}

TEST_CASE("scripted random runs conserve every cycle") {
  // Whatever mix of replies, duplicates and silence the wire produces,
  // the terminal statuses must partition the send set.
  std::mt19937_64 rng(21);
  for (int round = 0; round < 20; ++round) {
    const std::uint64_t n = 200;
    ReplyMatcher m(n, config());
    std::uniform_int_distribution<int> kind(0, 9);
    std::uniform_int_distribution<std::uint64_t> delay(1, 3 * kPeriod);
    for (std::uint64_t i = 0; i < n; ++i) {
      const Timestamp sent = at(i * kPeriod);
      m.on_send(i, sent, kind(rng) == 9);
      m.advance(sent);
      switch (kind(rng)) {
        case 0:  // silent; becomes lost or send_overrun
          break;
        case 1: {  // duplicated reply
          const Timestamp reply = sent + delay(rng);
          m.on_reply(i, reply);
          m.on_reply(i, reply);
          break;
        }
        default:
          m.on_reply(i, sent + delay(rng));
      }
    }
    m.finalize();
    std::uint64_t ok = 0, late = 0, lost = 0, overrun = 0;
    for (const auto& s : m.samples()) {
      switch (s.status) {
        case SampleStatus::ok: ++ok; break;
        case SampleStatus::late_arrival: ++late; break;
        case SampleStatus::lost: ++lost; break;
        case SampleStatus::send_overrun: ++overrun; break;
        case SampleStatus::pending: FAIL("pending after finalize"); break;
      }
    }
    CHECK(ok + late + lost + overrun == n);
    CHECK(m.sends_registered() == n);
  }
}

TEST_CASE("sends must arrive in sequence order") {
  ReplyMatcher m(4, config());
  m.on_send(0, at(0), false);
  CHECK_THROWS_AS(m.on_send(2, at(kPeriod), false), std::logic_error);
}

TEST_CASE("constructor rejects a zero period and a zero horizon") {
  CHECK_THROWS_AS(ReplyMatcher(1, ReplyMatcher::Config{0, 1, 4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ReplyMatcher(1, ReplyMatcher::Config{kPeriod, kPeriod, 0}),
                  std::invalid_argument);
}

}  // TEST_SUITE
