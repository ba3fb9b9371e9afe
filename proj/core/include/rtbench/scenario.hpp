#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rtbench/loadgen.hpp"
#include "rtbench/matcher.hpp"
#include "rtbench/probe.hpp"
#include "rtbench/socket.hpp"
#include "rtbench/time.hpp"
#include "rtbench/tuning.hpp"

namespace rtbench {

enum class Role { client, server, sink };

const char* to_string(Role role);
Role parse_role(const std::string& text);  // UsageError on unknown

// The four load conditions of the benchmark matrix.
enum class LoadCondition { idle, stress, tx_traffic, rx_traffic };

const char* to_string(LoadCondition condition);
LoadCondition parse_load_condition(const std::string& text);

// Load condition plus its parameters. The embedded spec is present exactly
// when the condition needs one: stress carries a StressSpec, the two traffic
// conditions carry a TrafficSpec, idle carries nothing.
struct LoadSpec {
  LoadCondition condition = LoadCondition::idle;
  std::optional<StressSpec> stress;
  std::optional<TrafficSpec> traffic;

  void validate() const;
};

struct OutputPaths {
  std::string record;      // run record JSON
  std::string histogram;   // columnar histogram data
  std::string timeseries;  // columnar time series data

  friend bool operator==(const OutputPaths&, const OutputPaths&) = default;
};

// One complete run description: everything a client, server or sink process
// needs, plus the tuning mode and load condition the run claims to measure.
// Serializes to JSON; command-line flags override individual fields.
struct ScenarioSpec {
  Role role = Role::client;
  SocketConfig socket;  // peer endpoint lives here
  CycleSpec cycles;
  std::size_t payload_size = kDefaultPayloadSize;
  std::uint64_t loss_horizon_periods = kDefaultLossHorizonPeriods;
  bool collect_timeseries = false;
  TuningMode mode = TuningMode::no_rt;
  LoadSpec load;
  OutputPaths output;

  void validate() const;

  std::string to_json() const;
  static ScenarioSpec from_json(const std::string& text);  // RecordError on bad input
  static ScenarioSpec load_file(const std::string& path);
};

}  // namespace rtbench
