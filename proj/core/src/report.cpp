#include "rtbench/report.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rtbench/errors.hpp"

using nlohmann::json;

namespace rtbench {

const char* mode_title(TuningMode mode) {
  switch (mode) {
    case TuningMode::no_rt: return "No RT";
    case TuningMode::rt_normal: return "RT Normal";
    case TuningMode::rt_affinities: return "RT Affinity";
    case TuningMode::rt_isolation: return "RT, CPU Isolated";
  }
  return "?";
}

EnvironmentInfo EnvironmentInfo::capture(std::string device) {
  EnvironmentInfo info;
  utsname names{};
  if (uname(&names) == 0) info.kernel_version = names.release;
  char host[256] = {};
  if (gethostname(host, sizeof(host) - 1) == 0) info.hostname = host;
  info.device = std::move(device);
  return info;
}

void RunRecord::validate() const {
  scenario.validate();
  if (plan) plan->validate();
  if (summary.count_received + summary.count_lost != summary.count_sent) {
    throw RecordError("record violates conservation: received + lost != sent");
  }
  if (histogram.total() != summary.count_received) {
    throw RecordError("record violates histogram conservation: bin total " +
                      std::to_string(histogram.total()) + " != received " +
                      std::to_string(summary.count_received));
  }
  if (summary.count_missed_deadline > summary.count_received) {
    throw RecordError("record has more deadline misses than received samples");
  }
  if (summary.count_received > 0 && summary.min_rtt_ns > summary.max_rtt_ns) {
    throw RecordError("record has min rtt above max rtt");
  }
  if (timeseries && timeseries->size() > summary.count_received) {
    throw RecordError("record time series has more points than received samples");
  }
}

// --- JSON -----------------------------------------------------------------------

namespace {

json summary_to_json(const RunSummary& s) {
  json j;
  j["sent"] = s.count_sent;
  j["received"] = s.count_received;
  j["lost"] = s.count_lost;
  j["missed_deadline"] = s.count_missed_deadline;
  j["send_overrun"] = s.count_send_overrun;
  j["duplicates"] = s.duplicates;
  j["stale_replies"] = s.stale_replies;
  j["min_rtt_ns"] = s.min_rtt_ns;
  j["max_rtt_ns"] = s.max_rtt_ns;
  j["rtt_sum_ns"] = s.rtt_sum_ns;
  return j;
}

RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.count_sent = j.at("sent").get<std::uint64_t>();
  s.count_received = j.at("received").get<std::uint64_t>();
  s.count_lost = j.at("lost").get<std::uint64_t>();
  s.count_missed_deadline = j.at("missed_deadline").get<std::uint64_t>();
  s.count_send_overrun = j.value("send_overrun", std::uint64_t{0});
  s.duplicates = j.value("duplicates", std::uint64_t{0});
  s.stale_replies = j.value("stale_replies", std::uint64_t{0});
  s.min_rtt_ns = j.at("min_rtt_ns").get<std::uint64_t>();
  s.max_rtt_ns = j.at("max_rtt_ns").get<std::uint64_t>();
  s.rtt_sum_ns = j.at("rtt_sum_ns").get<std::uint64_t>();
  return s;
}

json histogram_to_json(const LatencyHistogram& h) {
  json j;
  j["bin_width_ns"] = h.bin_width_ns();
  j["overflow_threshold_ns"] = h.overflow_threshold_ns();
  json bins = json::array();
  for (const auto& [index, count] : h.nonempty_bins()) {
    bins.push_back({index, count});
  }
  j["bins"] = std::move(bins);
  j["overflow_count"] = h.overflow_count();
  return j;
}

LatencyHistogram histogram_from_json(const json& j) {
  LatencyHistogram h(j.at("bin_width_ns").get<std::uint64_t>(),
                     j.at("overflow_threshold_ns").get<std::uint64_t>());
  for (const auto& bin : j.at("bins")) {
    h.set_bin(bin.at(0).get<std::uint64_t>(), bin.at(1).get<std::uint64_t>());
  }
  h.set_overflow_count(j.at("overflow_count").get<std::uint64_t>());
  return h;
}

}  // namespace

std::string record_to_json(const RunRecord& record) {
  json j;
  j["schema_version"] = RunRecord::kSchemaVersion;
  j["scenario"] = json::parse(record.scenario.to_json());
  if (record.plan) j["plan"] = json::parse(record.plan->to_json());
  j["environment"] = {{"kernel_version", record.environment.kernel_version},
                      {"hostname", record.environment.hostname},
                      {"device", record.environment.device}};
  j["summary"] = summary_to_json(record.summary);
  j["histogram"] = histogram_to_json(record.histogram);
  if (record.timeseries) {
    json points = json::array();
    for (const auto& [index, rtt_ns] : record.timeseries->points()) {
      points.push_back({index, rtt_ns});
    }
    j["timeseries"] = std::move(points);
  }
  j["started_unix_ns"] = record.started_unix_ns;
  j["finished_unix_ns"] = record.finished_unix_ns;
  return j.dump(2) + "\n";
}

RunRecord record_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != RunRecord::kSchemaVersion) {
      throw RecordError("unsupported record schema version " +
                        std::to_string(version));
    }
    RunRecord record;
    record.scenario = ScenarioSpec::from_json(j.at("scenario").dump());
    if (j.contains("plan")) {
      record.plan = TuningPlan::from_json(j.at("plan").dump());
    }
    const auto& env = j.at("environment");
    record.environment.kernel_version = env.value("kernel_version", std::string{});
    record.environment.hostname = env.value("hostname", std::string{});
    record.environment.device = env.value("device", std::string{});
    record.summary = summary_from_json(j.at("summary"));
    record.histogram = histogram_from_json(j.at("histogram"));
    if (j.contains("timeseries")) {
      TimeSeries series;
      for (const auto& point : j.at("timeseries")) {
        series.append(point.at(0).get<std::uint64_t>(),
                      point.at(1).get<std::uint64_t>());
      }
      record.timeseries = std::move(series);
    }
    record.started_unix_ns = j.value("started_unix_ns", std::uint64_t{0});
    record.finished_unix_ns = j.value("finished_unix_ns", std::uint64_t{0});
    record.validate();
    return record;
  } catch (const RecordError&) {
    throw;
  } catch (const std::exception& e) {
    throw RecordError(std::string("invalid run record: ") + e.what());
  }
}

void save_record(const RunRecord& record, const std::string& path) {
  record.validate();
  std::ofstream out(path);
  if (!out) throw RecordError("cannot open " + path + " for writing");
  out << record_to_json(record);
  if (!out) throw RecordError("write to " + path + " failed");
}

RunRecord load_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open record file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return record_from_json(buf.str());
}

// --- table -----------------------------------------------------------------------

std::string load_row_label(const LoadSpec& load) {
  switch (load.condition) {
    case LoadCondition::idle:
      return "Idle";
    case LoadCondition::stress:
      return "Stress";
    case LoadCondition::tx_traffic:
    case LoadCondition::rx_traffic: {
      const char* direction =
          load.condition == LoadCondition::tx_traffic ? "TX" : "RX";
      std::uint64_t mbps = 0;
      if (load.traffic) {
        mbps = load.traffic->target_bandwidth_bps / 1'000'000;
      }
      return std::string(direction) + " traffic at " + std::to_string(mbps) + " Mbps";
    }
  }
  return "?";
}

namespace {

std::string ratio_cell(std::uint64_t k, std::uint64_t n) {
  return std::to_string(k) + " / " + std::to_string(n);
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_table(const std::vector<RunRecord>& records) {
  if (records.empty()) throw UsageError("cannot render a table from zero records");
  const TuningMode mode = records.front().scenario.mode;
  for (const auto& record : records) {
    if (record.scenario.mode != mode) {
      throw UsageError("table records mix tuning modes (one table per mode)");
    }
  }

  std::vector<const RunRecord*> ordered;
  ordered.reserve(records.size());
  for (const auto& record : records) ordered.push_back(&record);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RunRecord* a, const RunRecord* b) {
                     return static_cast<int>(a->scenario.load.condition) <
                            static_cast<int>(b->scenario.load.condition);
                   });

  const std::vector<std::string> headers = {"Load",    "Min(us)",         "Avg(us)",
                                            "Max(us)", "Missed deadline", "Packet loss"};
  std::vector<std::vector<std::string>> rows;
  for (const RunRecord* record : ordered) {
    const RunSummary& s = record->summary;
    std::vector<std::string> row;
    row.push_back(load_row_label(record->scenario.load));
    if (s.count_received > 0) {
      row.push_back(std::to_string(s.min_rtt_us()));
      row.push_back(std::to_string(s.avg_rtt_us()));
      row.push_back(std::to_string(s.max_rtt_us()));
    } else {
      row.insert(row.end(), {"-", "-", "-"});
    }
    row.push_back(ratio_cell(s.count_missed_deadline, s.count_sent));
    row.push_back(ratio_cell(s.count_lost, s.count_sent));
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
  }

  std::ostringstream out;
  out << mode_title(mode) << ", Kernel version: "
      << records.front().environment.kernel_version << "\n";
  for (std::size_t c = 0; c < headers.size(); ++c) {
    if (c > 0) out << "  ";
    out << (c == 0 ? pad_right(headers[c], widths[c]) : pad_left(headers[c], widths[c]));
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      out << (c == 0 ? pad_right(row[c], widths[c]) : pad_left(row[c], widths[c]));
    }
    out << "\n";
  }
  return out.str();
}

// --- plot data ---------------------------------------------------------------------

std::string emit_histogram(const RunRecord& record) {
  const LatencyHistogram& h = record.histogram;
  if (h.bin_width_ns() % kNanosPerMicro != 0) {
    throw std::invalid_argument("histogram emission needs a whole-microsecond bin width");
  }
  const std::uint64_t width_us = h.bin_width_ns() / kNanosPerMicro;
  std::ostringstream out;
  for (const auto& [index, count] : h.nonempty_bins()) {
    out << index * width_us << ' ' << count << '\n';
  }
  if (h.overflow_count() > 0) {
    out << "# overflow " << h.overflow_count() << '\n';
  }
  return out.str();
}

LatencyHistogram parse_histogram_data(const std::string& text,
                                      std::uint64_t bin_width_ns,
                                      std::uint64_t overflow_threshold_ns) {
  LatencyHistogram h(bin_width_ns, overflow_threshold_ns);
  if (bin_width_ns % kNanosPerMicro != 0) {
    throw std::invalid_argument("histogram data needs a whole-microsecond bin width");
  }
  const std::uint64_t width_us = bin_width_ns / kNanosPerMicro;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash, word;
      std::uint64_t count = 0;
      if (fields >> hash >> word >> count && word == "overflow") {
        h.set_overflow_count(count);
      }
      continue;
    }
    std::uint64_t latency_us = 0, count = 0;
    if (!(fields >> latency_us >> count)) {
      throw RecordError("bad histogram line '" + line + "'");
    }
    h.set_bin(latency_us / width_us, count);
  }
  return h;
}

std::string emit_timeseries(const RunRecord& record) {
  if (!record.timeseries) {
    throw UsageError("record carries no time series (run the client with it enabled)");
  }
  std::ostringstream out;
  for (const auto& [index, rtt_ns] : record.timeseries->points()) {
    out << index << ' ' << ns_to_us_half_up(rtt_ns) << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> parse_timeseries_data(
    const std::string& text) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> points;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::uint64_t index = 0, rtt_us = 0;
    if (!(fields >> index >> rtt_us)) {
      throw RecordError("bad time series line '" + line + "'");
    }
    points.emplace_back(index, rtt_us);
  }
  return points;
}

}  // namespace rtbench
