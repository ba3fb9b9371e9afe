#pragma once

#include <cstdint>
#include <limits>

namespace rtbench {

inline constexpr std::uint64_t kNanosPerMicro = 1000;
inline constexpr std::uint64_t kNanosPerMilli = 1000 * 1000;
inline constexpr std::uint64_t kNanosPerSecond = 1000 * 1000 * 1000;

// A point on the process-local monotonic clock, in nanoseconds since an
// arbitrary epoch. 64 unsigned bits cover ~584 years, so no wrap handling.
struct Timestamp {
  std::uint64_t ns = 0;

  friend constexpr bool operator==(Timestamp a, Timestamp b) { return a.ns == b.ns; }
  friend constexpr bool operator!=(Timestamp a, Timestamp b) { return a.ns != b.ns; }
  friend constexpr bool operator<(Timestamp a, Timestamp b) { return a.ns < b.ns; }
  friend constexpr bool operator<=(Timestamp a, Timestamp b) { return a.ns <= b.ns; }
  friend constexpr bool operator>(Timestamp a, Timestamp b) { return a.ns > b.ns; }
  friend constexpr bool operator>=(Timestamp a, Timestamp b) { return a.ns >= b.ns; }
};

constexpr Timestamp operator+(Timestamp t, std::uint64_t delta_ns) {
  return Timestamp{t.ns + delta_ns};
}

// Non-negative distance between two timestamps, later minus earlier.
constexpr std::uint64_t elapsed_ns(Timestamp earlier, Timestamp later) {
  return later.ns >= earlier.ns ? later.ns - earlier.ns : 0;
}

// Round a nanosecond duration to whole microseconds, half up.
constexpr std::uint64_t ns_to_us_half_up(std::uint64_t ns) {
  return (ns + kNanosPerMicro / 2) / kNanosPerMicro;
}

// Parameters of one periodic measurement run.
struct CycleSpec {
  std::uint64_t period_ns = kNanosPerMilli;
  std::uint64_t deadline_ns = kNanosPerMilli;
  std::uint64_t warmup_cycles = 1000;  // excluded from statistics
  std::uint64_t total_cycles = 600000;

  std::uint64_t cycle_count() const { return warmup_cycles + total_cycles; }

  // Throws std::invalid_argument when period, deadline or total_cycles is zero.
  void validate() const;

  friend bool operator==(const CycleSpec&, const CycleSpec&) = default;
};

// Absolute send schedule anchored at t0: target(n) = t0 + n * period.
// Pure arithmetic; the anchor is never moved, so wake latency in one cycle
// cannot shift any later target.
class CycleSchedule {
 public:
  // Throws std::overflow_error when t0 + (count + 1) * period does not fit
  // in 64-bit nanoseconds, std::invalid_argument on a bad spec.
  CycleSchedule(Timestamp t0, const CycleSpec& spec);

  // n may be one past the last cycle (used for overrun checks).
  Timestamp target(std::uint64_t n) const { return Timestamp{t0_.ns + n * period_ns_}; }

  Timestamp anchor() const { return t0_; }
  std::uint64_t period_ns() const { return period_ns_; }
  std::uint64_t count() const { return count_; }

 private:
  Timestamp t0_;
  std::uint64_t period_ns_ = 0;
  std::uint64_t count_ = 0;
};

// Clock interface used by the measurement loop. Virtual so tests can inject
// a simulated clock with scripted wake latencies.
class ClockSource {
 public:
  virtual ~ClockSource() = default;

  // Current monotonic time; successive calls never decrease.
  virtual Timestamp now() = 0;

  // Absolute-time sleep. Returns the actual wake time w >= t; a target in
  // the past returns immediately. Interruptions are resumed transparently.
  virtual Timestamp sleep_until(Timestamp t) = 0;
};

// CLOCK_MONOTONIC via clock_gettime / clock_nanosleep(TIMER_ABSTIME).
class MonotonicClock final : public ClockSource {
 public:
  // Throws std::system_error when the monotonic clock is unavailable.
  MonotonicClock();

  Timestamp now() override;
  Timestamp sleep_until(Timestamp t) override;
};

}  // namespace rtbench
