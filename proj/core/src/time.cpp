#include "rtbench/time.hpp"

#include <cerrno>
#include <ctime>
#include <stdexcept>
#include <system_error>

namespace rtbench {

void CycleSpec::validate() const {
  if (period_ns == 0) throw std::invalid_argument("cycle period must be > 0");
  if (deadline_ns == 0) throw std::invalid_argument("cycle deadline must be > 0");
  if (total_cycles == 0) throw std::invalid_argument("total_cycles must be > 0");
}

CycleSchedule::CycleSchedule(Timestamp t0, const CycleSpec& spec)
    : t0_(t0), period_ns_(spec.period_ns), count_(spec.cycle_count()) {
  spec.validate();
  // target(count) must stay representable: the loop looks one slot past the
  // last cycle when classifying overruns.
  std::uint64_t span = 0;
  if (__builtin_mul_overflow(period_ns_, count_ + 1, &span) ||
      __builtin_add_overflow(t0_.ns, span, &span)) {
    throw std::overflow_error("cycle schedule exceeds 64-bit nanosecond range");
  }
}

namespace {

Timestamp from_timespec(const timespec& ts) {
  return Timestamp{static_cast<std::uint64_t>(ts.tv_sec) * kNanosPerSecond +
                   static_cast<std::uint64_t>(ts.tv_nsec)};
}

timespec to_timespec(Timestamp t) {
  timespec ts;
  ts.tv_sec = static_cast<time_t>(t.ns / kNanosPerSecond);
  ts.tv_nsec = static_cast<long>(t.ns % kNanosPerSecond);
  return ts;
}

}  // namespace

MonotonicClock::MonotonicClock() {
  timespec ts;
  if (clock_gettime(CLOCK_MONOTONIC, &ts) != 0) {
    throw std::system_error(errno, std::generic_category(),
                            "CLOCK_MONOTONIC unavailable");
  }
}

Timestamp MonotonicClock::now() {
  timespec ts;
  if (clock_gettime(CLOCK_MONOTONIC, &ts) != 0) {
    throw std::system_error(errno, std::generic_category(), "clock_gettime");
  }
  return from_timespec(ts);
}

Timestamp MonotonicClock::sleep_until(Timestamp t) {
  const timespec target = to_timespec(t);
  int rc;
  do {
    rc = clock_nanosleep(CLOCK_MONOTONIC, TIMER_ABSTIME, &target, nullptr);
  } while (rc == EINTR);
  if (rc != 0) {
    throw std::system_error(rc, std::generic_category(), "clock_nanosleep");
  }
  Timestamp wake = now();
  // clock_nanosleep guarantees wake >= target; keep the reported wake
  // consistent with that even if the clock read races a coarse tick.
  if (wake < t) wake = t;
  return wake;
}

}  // namespace rtbench
