#include "rtbench/matcher.hpp"

#include <stdexcept>

namespace rtbench {

ReplyMatcher::ReplyMatcher(std::size_t cycle_count, Config cfg) : cfg_(cfg) {
  if (cfg_.period_ns == 0) throw std::invalid_argument("matcher period must be > 0");
  if (cfg_.loss_horizon_periods == 0) {
    throw std::invalid_argument("loss horizon must be >= 1 period");
  }
  horizon_ns_ = cfg_.loss_horizon_periods * cfg_.period_ns;
  retention_ns_ = 2 * horizon_ns_;
  samples_.resize(cycle_count);
  for (std::size_t i = 0; i < cycle_count; ++i) {
    samples_[i].sequence = i;
  }
}

void ReplyMatcher::on_send(std::uint64_t sequence, Timestamp t_send, bool overrun) {
  if (sequence != next_send_ || sequence >= samples_.size()) {
    throw std::logic_error("sends must be registered in order");
  }
  RoundTripSample& s = samples_[sequence];
  s.t_send = t_send;
  s.overrun = overrun;
  ++next_send_;
}

ReplyMatcher::ReplyOutcome ReplyMatcher::on_reply(std::uint64_t sequence,
                                                  Timestamp t_recv) {
  if (sequence >= next_send_) {
    // Reply for a probe this run never sent; nothing to attribute it to.
    ++stale_replies_;
    return ReplyOutcome::stale;
  }
  RoundTripSample& s = samples_[sequence];
  switch (s.status) {
    case SampleStatus::pending: {
      s.t_recv = t_recv;
      s.rtt_ns = elapsed_ns(s.t_send, t_recv);
      s.status = s.rtt_ns > cfg_.deadline_ns ? SampleStatus::late_arrival
                                             : SampleStatus::ok;
      return s.status == SampleStatus::ok ? ReplyOutcome::matched_ok
                                          : ReplyOutcome::matched_late;
    }
    case SampleStatus::ok:
    case SampleStatus::late_arrival:
      ++duplicates_;
      return ReplyOutcome::duplicate;
    case SampleStatus::lost:
    case SampleStatus::send_overrun: {
      const std::uint64_t age = elapsed_ns(s.t_send, t_recv);
      if (age <= retention_ns_) {
        s.t_recv = t_recv;
        s.rtt_ns = age;
        s.status = SampleStatus::late_arrival;
        return ReplyOutcome::reclassified_late;
      }
      ++stale_replies_;
      return ReplyOutcome::stale;
    }
  }
  ++stale_replies_;
  return ReplyOutcome::stale;
}

void ReplyMatcher::advance(Timestamp now) {
  while (finalize_from_ < next_send_) {
    RoundTripSample& s = samples_[finalize_from_];
    if (s.status == SampleStatus::pending) {
      if (elapsed_ns(s.t_send, now) < horizon_ns_) break;
      finalize_sample(s);
    }
    ++finalize_from_;
  }
}

void ReplyMatcher::finalize() {
  for (std::uint64_t i = finalize_from_; i < next_send_; ++i) {
    if (samples_[i].status == SampleStatus::pending) finalize_sample(samples_[i]);
  }
  finalize_from_ = next_send_;
}

void ReplyMatcher::finalize_sample(RoundTripSample& s) {
  s.status = s.overrun ? SampleStatus::send_overrun : SampleStatus::lost;
}

}  // namespace rtbench
