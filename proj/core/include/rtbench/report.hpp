#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtbench/scenario.hpp"
#include "rtbench/stats.hpp"
#include "rtbench/tuning.hpp"

namespace rtbench {

// Table caption title per mode, matching the result tables' inner captions.
const char* mode_title(TuningMode mode);

struct EnvironmentInfo {
  std::string kernel_version;
  std::string hostname;
  std::string device;  // NIC the tuning plan touched, may be empty

  // Reads kernel version and hostname from the running system.
  static EnvironmentInfo capture(std::string device = {});

  friend bool operator==(const EnvironmentInfo&, const EnvironmentInfo&) = default;
};

// The persisted unit of one measurement run: the scenario it claims to
// measure, the resolved tuning plan, the environment, and the results.
struct RunRecord {
  static constexpr int kSchemaVersion = 1;

  ScenarioSpec scenario;
  std::optional<TuningPlan> plan;
  EnvironmentInfo environment;
  RunSummary summary;
  LatencyHistogram histogram;
  std::optional<TimeSeries> timeseries;
  std::uint64_t started_unix_ns = 0;
  std::uint64_t finished_unix_ns = 0;

  // Conservation checks: received + lost == sent, histogram total ==
  // received, missed <= received. RecordError on violation.
  void validate() const;
};

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& text);  // validates invariants

void save_record(const RunRecord& record, const std::string& path);
RunRecord load_record(const std::string& path);

// Renders one result table: caption line "<mode>, Kernel version: <v>", a
// header row, then one row per record ordered idle, stress, tx-traffic,
// rx-traffic. All records must share one tuning mode. Deterministic output.
std::string render_table(const std::vector<RunRecord>& records);

// Row label in the tables: "Idle", "Stress", "TX traffic at 100 Mbps", ...
std::string load_row_label(const LoadSpec& load);

// Two-column plot data "<latency_us> <count>", one line per nonempty bin,
// ascending; the overflow bucket, when nonempty, is a trailing comment line.
// The bin width must be a whole number of microseconds.
std::string emit_histogram(const RunRecord& record);

// Reconstructs a histogram from emitted plot data (same bin parameters).
LatencyHistogram parse_histogram_data(const std::string& text,
                                      std::uint64_t bin_width_ns,
                                      std::uint64_t overflow_threshold_ns);

// Two-column plot data "<cycle_index> <rtt_us>", received samples only,
// index-ordered. Microseconds round half up, like the table cells.
std::string emit_timeseries(const RunRecord& record);

std::vector<std::pair<std::uint64_t, std::uint64_t>> parse_timeseries_data(
    const std::string& text);

}  // namespace rtbench
