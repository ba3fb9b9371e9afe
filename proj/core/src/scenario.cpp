#include "rtbench/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rtbench/errors.hpp"

using nlohmann::json;

namespace rtbench {

const char* to_string(Role role) {
  switch (role) {
    case Role::client: return "client";
    case Role::server: return "server";
    case Role::sink: return "sink";
  }
  return "?";
}

Role parse_role(const std::string& text) {
  if (text == "client") return Role::client;
  if (text == "server") return Role::server;
  if (text == "sink") return Role::sink;
  throw UsageError("unknown role '" + text + "' (expected client, server or sink)");
}

const char* to_string(LoadCondition condition) {
  switch (condition) {
    case LoadCondition::idle: return "idle";
    case LoadCondition::stress: return "stress";
    case LoadCondition::tx_traffic: return "tx-traffic";
    case LoadCondition::rx_traffic: return "rx-traffic";
  }
  return "?";
}

LoadCondition parse_load_condition(const std::string& text) {
  if (text == "idle") return LoadCondition::idle;
  if (text == "stress") return LoadCondition::stress;
  if (text == "tx-traffic") return LoadCondition::tx_traffic;
  if (text == "rx-traffic") return LoadCondition::rx_traffic;
  throw UsageError("unknown load condition '" + text +
                   "' (expected idle, stress, tx-traffic or rx-traffic)");
}

void LoadSpec::validate() const {
  const bool needs_stress = condition == LoadCondition::stress;
  const bool needs_traffic =
      condition == LoadCondition::tx_traffic || condition == LoadCondition::rx_traffic;
  if (needs_stress != stress.has_value()) {
    throw std::invalid_argument(
        "stress parameters present iff the load condition is stress");
  }
  if (needs_traffic != traffic.has_value()) {
    throw std::invalid_argument(
        "traffic parameters present iff the load condition is tx- or rx-traffic");
  }
  if (stress) stress->validate();
  if (traffic) traffic->validate();
}

void ScenarioSpec::validate() const {
  socket.validate();
  cycles.validate();
  load.validate();
  if (payload_size < kProbeHeaderSize || payload_size > 65507) {
    throw std::invalid_argument("payload size must be in 21..65507");
  }
  if (loss_horizon_periods == 0) {
    throw std::invalid_argument("loss horizon must be >= 1 period");
  }
  if (role == Role::client && !socket.peer.valid()) {
    throw std::invalid_argument("client scenarios need a peer endpoint");
  }
}

namespace {

json stress_to_json(const StressSpec& spec) {
  json j;
  j["cpu"] = spec.cpu_workers;
  j["io"] = spec.io_workers;
  j["vm"] = spec.vm_workers;
  j["vm_bytes"] = spec.vm_bytes;
  j["hdd"] = spec.disk_workers;
  j["hdd_bytes"] = spec.disk_bytes;
  j["duration_ns"] = spec.duration_ns;
  j["work_dir"] = spec.work_dir;
  return j;
}

StressSpec stress_from_json(const json& j) {
  StressSpec spec;
  spec.cpu_workers = j.value("cpu", 0);
  spec.io_workers = j.value("io", 0);
  spec.vm_workers = j.value("vm", 0);
  spec.vm_bytes = j.value("vm_bytes", spec.vm_bytes);
  spec.disk_workers = j.value("hdd", 0);
  spec.disk_bytes = j.value("hdd_bytes", spec.disk_bytes);
  spec.duration_ns = j.value("duration_ns", std::uint64_t{0});
  spec.work_dir = j.value("work_dir", spec.work_dir);
  return spec;
}

json traffic_to_json(const TrafficSpec& spec) {
  json j;
  j["bandwidth_bps"] = spec.target_bandwidth_bps;
  j["payload_size"] = spec.payload_size;
  j["destination"] = spec.destination.to_string();
  j["duration_ns"] = spec.duration_ns;
  j["priority_mark"] = spec.priority_mark;
  return j;
}

TrafficSpec traffic_from_json(const json& j) {
  TrafficSpec spec;
  spec.target_bandwidth_bps = j.value("bandwidth_bps", spec.target_bandwidth_bps);
  spec.payload_size = j.value("payload_size", spec.payload_size);
  if (j.contains("destination")) {
    spec.destination = Endpoint::parse(j.at("destination").get<std::string>());
  }
  spec.duration_ns = j.value("duration_ns", std::uint64_t{0});
  spec.priority_mark = j.value("priority_mark", spec.priority_mark);
  return spec;
}

}  // namespace

std::string ScenarioSpec::to_json() const {
  json j;
  j["role"] = to_string(role);
  j["local"] = socket.local.to_string();
  if (socket.peer.valid()) j["peer"] = socket.peer.to_string();
  j["priority_mark"] = socket.priority_mark;
  if (socket.tos) j["tos"] = *socket.tos;
  j["period_ns"] = cycles.period_ns;
  j["deadline_ns"] = cycles.deadline_ns;
  j["warmup_cycles"] = cycles.warmup_cycles;
  j["cycles"] = cycles.total_cycles;
  j["payload_size"] = payload_size;
  j["loss_horizon_periods"] = loss_horizon_periods;
  j["collect_timeseries"] = collect_timeseries;
  j["mode"] = rtbench::to_string(mode);
  json load_json;
  load_json["condition"] = rtbench::to_string(load.condition);
  if (load.stress) load_json["stress"] = stress_to_json(*load.stress);
  if (load.traffic) load_json["traffic"] = traffic_to_json(*load.traffic);
  j["load"] = std::move(load_json);
  json out;
  if (!output.record.empty()) out["record"] = output.record;
  if (!output.histogram.empty()) out["histogram"] = output.histogram;
  if (!output.timeseries.empty()) out["timeseries"] = output.timeseries;
  if (!out.empty()) j["output"] = std::move(out);
  return j.dump(2) + "\n";
}

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ScenarioSpec spec;
    if (j.contains("role")) spec.role = parse_role(j.at("role").get<std::string>());
    if (j.contains("local")) {
      spec.socket.local = Endpoint::parse(j.at("local").get<std::string>());
    }
    if (j.contains("peer")) {
      spec.socket.peer = Endpoint::parse(j.at("peer").get<std::string>());
    }
    spec.socket.priority_mark = j.value("priority_mark", spec.socket.priority_mark);
    if (j.contains("tos")) spec.socket.tos = j.at("tos").get<int>();
    spec.cycles.period_ns = j.value("period_ns", spec.cycles.period_ns);
    spec.cycles.deadline_ns = j.value("deadline_ns", spec.cycles.deadline_ns);
    spec.cycles.warmup_cycles = j.value("warmup_cycles", spec.cycles.warmup_cycles);
    spec.cycles.total_cycles = j.value("cycles", spec.cycles.total_cycles);
    spec.payload_size = j.value("payload_size", spec.payload_size);
    spec.loss_horizon_periods =
        j.value("loss_horizon_periods", spec.loss_horizon_periods);
    spec.collect_timeseries = j.value("collect_timeseries", spec.collect_timeseries);
    if (j.contains("mode")) {
      spec.mode = parse_tuning_mode(j.at("mode").get<std::string>());
    }
    if (j.contains("load")) {
      const auto& load = j.at("load");
      spec.load.condition =
          parse_load_condition(load.value("condition", std::string{"idle"}));
      if (load.contains("stress")) {
        spec.load.stress = stress_from_json(load.at("stress"));
      }
      if (load.contains("traffic")) {
        spec.load.traffic = traffic_from_json(load.at("traffic"));
      }
    }
    if (j.contains("output")) {
      const auto& out = j.at("output");
      spec.output.record = out.value("record", std::string{});
      spec.output.histogram = out.value("histogram", std::string{});
      spec.output.timeseries = out.value("timeseries", std::string{});
    }
    spec.validate();
    return spec;
  } catch (const std::exception& e) {
    throw RecordError(std::string("invalid scenario: ") + e.what());
  }
}

ScenarioSpec ScenarioSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace rtbench
