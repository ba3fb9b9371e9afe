// rtbench: UDP round-trip latency benchmark and Linux RT tuning driver.
//
// Exit codes (stable, see README): 0 success, 2 usage error, 3 capability
// error (missing privilege/CPUs/device), 4 runtime failure.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rtbench/backend.hpp"
#include "rtbench/capabilities.hpp"
#include "rtbench/client.hpp"
#include "rtbench/errors.hpp"
#include "rtbench/inventory.hpp"
#include "rtbench/loadgen.hpp"
#include "rtbench/matrix.hpp"
#include "rtbench/report.hpp"
#include "rtbench/scenario.hpp"
#include "rtbench/server.hpp"
#include "rtbench/tuning.hpp"

namespace {

using namespace rtbench;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
}

// Sets g_stop after the duration; 0 waits for a signal instead.
std::thread watchdog(std::uint64_t duration_ns) {
  return std::thread([duration_ns] {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::nanoseconds(duration_ns);
    while (!g_stop.load() &&
           (duration_ns == 0 || std::chrono::steady_clock::now() < deadline)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    g_stop.store(true);
  });
}

std::uint64_t unix_now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("short write to " + path);
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

// ---------------------------------------------------------------------------
// server

struct ServerArgs {
  std::string local = "0.0.0.0:7447";
  int priority = kRtPriorityMark;
  std::optional<int> tos;
  bool rt = false;
  int rt_priority = 80;
  std::string duration = "0";
};

int cmd_server(const ServerArgs& args) {
  SocketConfig cfg;
  cfg.local = Endpoint::parse(args.local);
  cfg.priority_mark = args.priority;
  cfg.tos = args.tos;
  cfg.validate();

  RttServer server(cfg);
  server.bind();
  if (args.rt) apply_sched_params(RtSchedParams::fifo(args.rt_priority));

  std::cout << "listening on " << cfg.local.host << ":" << server.port()
            << (args.rt ? " (SCHED_FIFO)" : "") << std::endl;

  install_signal_handlers();
  std::thread stopper = watchdog(parse_duration_literal(args.duration));
  server.serve(g_stop);
  stopper.join();

  const ServerStats& st = server.stats();
  std::cout << "received " << st.received << ", echoed " << st.echoed
            << ", decode errors " << st.decode_errors << ", send failures "
            << st.send_failures << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// client

struct ClientArgs {
  std::string scenario_file;
  std::string peer;
  std::string local;
  std::uint64_t period_us = 0;
  std::uint64_t deadline_us = 0;
  std::uint64_t cycles = 0;
  std::uint64_t warmup = 0;
  std::size_t payload = 0;
  int priority = 0;
  int tos = 0;
  std::uint64_t horizon = 0;
  std::string mode;
  bool timeseries = false;
  std::string record_out;
  std::string hist_out;
  std::string timeseries_out;
  bool print_scenario = false;
};

int cmd_client(const CLI::App& cmd, const ClientArgs& args) {
  ScenarioSpec spec;
  if (!args.scenario_file.empty()) spec = ScenarioSpec::load_file(args.scenario_file);
  spec.role = Role::client;

  // Flags override file values; only flags the user actually passed count.
  if (cmd.count("--peer")) spec.socket.peer = Endpoint::parse(args.peer);
  if (cmd.count("--local")) spec.socket.local = Endpoint::parse(args.local);
  if (cmd.count("--period-us")) {
    spec.cycles.period_ns = args.period_us * kNanosPerMicro;
    if (!cmd.count("--deadline-us")) spec.cycles.deadline_ns = spec.cycles.period_ns;
  }
  if (cmd.count("--deadline-us")) {
    spec.cycles.deadline_ns = args.deadline_us * kNanosPerMicro;
  }
  if (cmd.count("--cycles")) spec.cycles.total_cycles = args.cycles;
  if (cmd.count("--warmup")) spec.cycles.warmup_cycles = args.warmup;
  if (cmd.count("--payload")) spec.payload_size = args.payload;
  if (cmd.count("--priority")) spec.socket.priority_mark = args.priority;
  if (cmd.count("--tos")) spec.socket.tos = args.tos;
  if (cmd.count("--horizon")) spec.loss_horizon_periods = args.horizon;
  if (cmd.count("--mode")) spec.mode = parse_tuning_mode(args.mode);
  if (cmd.count("--timeseries")) spec.collect_timeseries = true;
  if (cmd.count("--record")) spec.output.record = args.record_out;
  if (cmd.count("--hist-out")) spec.output.histogram = args.hist_out;
  if (cmd.count("--timeseries-out")) spec.output.timeseries = args.timeseries_out;
  if (!spec.output.timeseries.empty()) spec.collect_timeseries = true;
  spec.validate();

  if (args.print_scenario) {
    std::cout << spec.to_json() << "\n";
    return kExitOk;
  }

  ClientConfig cfg;
  cfg.socket = spec.socket;
  cfg.cycles = spec.cycles;
  cfg.payload_size = spec.payload_size;
  cfg.loss_horizon_periods = spec.loss_horizon_periods;
  cfg.collect_timeseries = spec.collect_timeseries;

  // Every mode except no-rt runs the measurement thread under SCHED_FIFO.
  const RtSchedParams rt =
      spec.mode == TuningMode::no_rt ? RtSchedParams{} : RtSchedParams::fifo();

  RunRecord record;
  record.scenario = spec;
  record.started_unix_ns = unix_now_ns();
  ClientResult result = run_client(cfg, rt);
  record.finished_unix_ns = unix_now_ns();
  record.environment = EnvironmentInfo::capture();
  record.summary = result.summary;
  record.histogram = result.histogram;
  if (spec.collect_timeseries) record.timeseries = result.timeseries;

  if (!spec.output.record.empty()) save_record(record, spec.output.record);
  if (!spec.output.histogram.empty()) {
    write_text(spec.output.histogram, emit_histogram(record));
  }
  if (!spec.output.timeseries.empty()) {
    write_text(spec.output.timeseries, emit_timeseries(record));
  }

  const RunSummary& s = result.summary;
  std::cout << "sent " << s.count_sent << ", received " << s.count_received
            << ", lost " << s.count_lost << ", missed deadline "
            << s.count_missed_deadline << ", send overruns "
            << s.count_send_overrun << "\n";
  if (s.count_received > 0) {
    std::cout << "rtt min/avg/max = " << s.min_rtt_us() << "/" << s.avg_rtt_us()
              << "/" << s.max_rtt_us() << " us\n";
  }
  if (s.duplicates || s.stale_replies || result.protocol_errors ||
      result.send_failures) {
    std::cout << "anomalies: duplicates " << s.duplicates << ", stale replies "
              << s.stale_replies << ", protocol errors " << result.protocol_errors
              << ", send failures " << result.send_failures << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// tune

struct TuneArgs {
  std::string mode;
  std::string plan_file;
  std::string device;
  std::string vlan_interface;
  std::string irq_pattern;
  int rt_cpu = -1;
  int priority = kRtPriorityMark;
  std::string out;
  bool commands_only = false;
  bool live = false;
  bool dry_run = false;
};

TuningPlan resolve_plan(const CLI::App& cmd, const TuneArgs& args) {
  if (!args.plan_file.empty()) {
    std::ifstream in(args.plan_file);
    if (!in) throw UsageError("cannot open plan file " + args.plan_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    return TuningPlan::from_json(buf.str());
  }
  if (args.mode.empty()) throw UsageError("either --mode or --plan is required");
  PlanOptions options;
  options.device = args.device;
  options.vlan_interface = args.vlan_interface;
  options.rt_queue_irq_pattern = args.irq_pattern;
  if (cmd.count("--rt-cpu")) options.rt_cpu = args.rt_cpu;
  options.priority_mark = args.priority;
  return plan_for_mode(parse_tuning_mode(args.mode), SystemInventory::detect(),
                       options);
}

int cmd_tune_show(const CLI::App& cmd, const TuneArgs& args) {
  const TuningPlan plan = resolve_plan(cmd, args);
  if (args.commands_only) {
    std::string text;
    const BackendPaths paths = BackendPaths::from_environment();
    for (const ConfigAction& action : plan_actions(plan, paths)) {
      if (action.kind == ActionKind::run_command) text += action.target + "\n";
    }
    emit(args.out, text);
    return kExitOk;
  }
  emit(args.out, plan.to_json() + "\n");
  return kExitOk;
}

int cmd_tune_apply(const CLI::App& cmd, const TuneArgs& args) {
  const TuningPlan plan = resolve_plan(cmd, args);
  const BackendPaths paths = BackendPaths::from_environment();
  DryRunBackend dry;
  LiveBackend live(paths);
  ConfigBackend& backend =
      args.live ? static_cast<ConfigBackend&>(live) : static_cast<ConfigBackend&>(dry);

  const ApplyReport report = apply(plan, backend, paths);
  for (const StepResult& step : report.steps) {
    std::cout << to_string(step.outcome) << "  [" << step.action.group << "] "
              << step.action.description;
    if (!step.detail.empty()) std::cout << " (" << step.detail << ")";
    std::cout << "\n";
  }
  std::cout << (report.dry_run ? "dry run: " : "applied: ")
            << report.count(StepOutcome::ok) << " ok, "
            << report.count(StepOutcome::failed) << " failed, "
            << report.count(StepOutcome::skipped) << " skipped\n";
  return report.all_ok() ? kExitOk : kExitFailure;
}

int cmd_tune_verify(const CLI::App& cmd, const TuneArgs& args) {
  const TuningPlan plan = resolve_plan(cmd, args);
  const BackendPaths paths = BackendPaths::from_environment();
  DryRunBackend dry;
  LiveBackend live(paths);
  ConfigBackend* backend = &live;
  if (args.dry_run) {
    // Self-check mode: apply to the simulator, then read back from it.
    apply(plan, dry, paths);
    backend = &dry;
  }

  const VerifyReport report = verify(plan, *backend, paths);
  for (const CheckResult& check : report.checks) {
    std::cout << to_string(check.status) << "  " << check.item;
    if (check.status == CheckStatus::mismatch) {
      std::cout << "\n    expected: " << check.expected
                << "\n    actual:   " << check.actual;
    }
    std::cout << "\n";
  }
  std::cout << report.count(CheckStatus::match) << " match, "
            << report.count(CheckStatus::mismatch) << " mismatch, "
            << report.count(CheckStatus::unknown) << " unknown\n";
  return report.consistent() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// load generation

int cmd_stress(const std::vector<std::string>& extras) {
  const StressSpec spec = parse_stress_args(extras);
  install_signal_handlers();
  const StressReport report = run_stress(spec, &g_stop);
  for (const WorkerReport& w : report.workers) {
    std::cout << w.kind << "[" << w.index << "] " << w.iterations << " iterations"
              << (w.ok ? "" : " FAILED: " + w.error) << "\n";
  }
  std::cout << "ran " << report.workers.size() << " workers for "
            << report.duration_ns / kNanosPerMilli << " ms\n";
  return report.all_ok() ? kExitOk : kExitFailure;
}

struct TrafficArgs {
  std::string dest;
  std::string bandwidth = "100M";
  std::size_t payload = 1470;
  std::string duration = "0";
  int priority = kBestEffortPriorityMark;
};

int cmd_traffic(const TrafficArgs& args) {
  TrafficSpec spec;
  spec.destination = Endpoint::parse(args.dest);
  spec.target_bandwidth_bps = parse_bandwidth_literal(args.bandwidth);
  spec.payload_size = args.payload;
  spec.duration_ns = parse_duration_literal(args.duration);
  spec.priority_mark = args.priority;
  spec.validate();

  install_signal_handlers();
  const TrafficReport report = run_traffic(spec, &g_stop);
  std::cout << "sent " << report.bytes_sent << " bytes in " << report.packets_sent
            << " datagrams over " << report.duration_ns / kNanosPerMilli
            << " ms: " << static_cast<std::uint64_t>(report.achieved_bps())
            << " bps";
  if (report.send_failures) std::cout << ", " << report.send_failures << " failures";
  std::cout << "\n";
  return kExitOk;
}

struct SinkArgs {
  std::string local = "0.0.0.0:7448";
  std::string duration = "0";
  bool windows = false;
};

int cmd_sink(const SinkArgs& args) {
  UdpSink sink(Endpoint::parse(args.local));
  sink.bind();
  std::cout << "sink listening on port " << sink.port() << std::endl;

  install_signal_handlers();
  std::thread stopper = watchdog(parse_duration_literal(args.duration));
  sink.run(g_stop);
  g_stop.store(true);
  stopper.join();

  const UdpSink::Report& report = sink.report();
  if (args.windows) {
    for (const UdpSink::Window& w : report.windows) {
      std::cout << w.index << " " << w.bytes * 8 << " " << w.packets << "\n";
    }
  }
  std::cout << "received " << report.bytes << " bytes in " << report.packets
            << " datagrams: " << static_cast<std::uint64_t>(report.achieved_bps())
            << " bps\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

int cmd_report_table(const std::vector<std::string>& files, const std::string& out) {
  std::vector<RunRecord> records;
  records.reserve(files.size());
  for (const std::string& file : files) records.push_back(load_record(file));
  emit(out, render_table(records));
  return kExitOk;
}

int cmd_report_hist(const std::string& file, const std::string& out) {
  emit(out, emit_histogram(load_record(file)));
  return kExitOk;
}

int cmd_report_timeseries(const std::string& file, const std::string& out) {
  emit(out, emit_timeseries(load_record(file)));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// matrix & doctor

struct MatrixArgs {
  std::string file;
  std::string output_dir;
  bool live = false;
};

int cmd_matrix(const CLI::App& cmd, const MatrixArgs& args) {
  MatrixSpec spec = MatrixSpec::load_file(args.file);
  if (cmd.count("--output-dir")) spec.output_dir = args.output_dir;
  if (args.live) spec.live_tuning = true;

  const MatrixResult result =
      run_matrix(spec, SystemInventory::detect(), &std::cout);
  std::cout << result.cells.size() - result.failures() << "/" << result.cells.size()
            << " cells ok\n";
  for (const CellResult& cell : result.cells) {
    if (!cell.ok) {
      std::cout << "failed: " << to_string(cell.cell.mode) << " / "
                << to_string(cell.cell.load.condition) << ": " << cell.error << "\n";
    }
  }
  return result.all_ok() ? kExitOk : kExitFailure;
}

int cmd_doctor() {
  const CapabilityReport report =
      run_doctor(SystemInventory::detect(), BackendPaths::from_environment());
  for (const CapabilityCheck& check : report.checks) {
    std::cout << to_string(check.status) << "\t" << check.name << "\t"
              << check.detail << "\n";
  }
  std::cout << report.count(ProbeStatus::ok) << " ok, "
            << report.count(ProbeStatus::warn) << " warn, "
            << report.count(ProbeStatus::fail) << " fail\n";
  return report.ok() ? kExitOk : kExitCapability;
}

void add_tune_options(CLI::App* cmd, TuneArgs& args) {
  cmd->add_option("--mode", args.mode,
                  "Tuning mode: no-rt, rt-normal, rt-affinities, rt-isolation");
  cmd->add_option("--plan", args.plan_file, "Load a plan JSON instead of planning")
      ->excludes("--mode");
  cmd->add_option("--device", args.device, "Network device (default: first non-lo)");
  cmd->add_option("--vlan-interface", args.vlan_interface,
                  "VLAN interface for the egress map (default: <device>.2)");
  cmd->add_option("--irq-pattern", args.irq_pattern,
                  "IRQ name substring for the RT queue (default: <device>-tx-0)");
  cmd->add_option("--rt-cpu", args.rt_cpu, "CPU reserved for the RT path");
  cmd->add_option("--priority", args.priority, "SKB priority of the RT traffic")
      ->check(CLI::Range(0, kSkbPriorityLevels - 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UDP round-trip latency benchmark with Linux RT tuning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rtbench 0.1.0");

  std::function<int()> action;

  // server
  ServerArgs server_args;
  CLI::App* server = app.add_subcommand("server", "Echo replies to probe datagrams");
  server->add_option("--local", server_args.local, "Bind address (host:port)");
  server->add_option("--priority", server_args.priority, "SKB priority for echoes")
      ->check(CLI::Range(0, kSkbPriorityLevels - 1));
  server->add_option("--tos", server_args.tos, "IP TOS byte")
      ->check(CLI::Range(0, 255));
  server->add_flag("--rt", server_args.rt, "Serve under SCHED_FIFO");
  server->add_option("--rt-priority", server_args.rt_priority, "SCHED_FIFO priority")
      ->check(CLI::Range(1, 99));
  server->add_option("--duration", server_args.duration,
                     "Stop after this long (e.g. 30s, 2m; 0 = until signal)");
  server->callback([&] { action = [&] { return cmd_server(server_args); }; });

  // client
  ClientArgs client_args;
  CLI::App* client =
      app.add_subcommand("client", "Run the timed ping-pong measurement");
  client->add_option("--scenario", client_args.scenario_file,
                     "Scenario JSON; flags override its fields");
  client->add_option("--peer", client_args.peer, "Server endpoint (host:port)");
  client->add_option("--local", client_args.local, "Bind address (host:port)");
  client->add_option("--period-us", client_args.period_us, "Send period")
      ->check(CLI::PositiveNumber);
  client->add_option("--deadline-us", client_args.deadline_us,
                     "Deadline (default: the period)")
      ->check(CLI::PositiveNumber);
  client->add_option("--cycles", client_args.cycles, "Measured cycles")
      ->check(CLI::PositiveNumber);
  client->add_option("--warmup", client_args.warmup,
                     "Warmup cycles excluded from statistics");
  client->add_option("--payload", client_args.payload, "Probe datagram size");
  client->add_option("--priority", client_args.priority, "SKB priority mark")
      ->check(CLI::Range(0, kSkbPriorityLevels - 1));
  client->add_option("--tos", client_args.tos, "IP TOS byte")
      ->check(CLI::Range(0, 255));
  client->add_option("--horizon", client_args.horizon,
                     "Loss horizon in periods")
      ->check(CLI::PositiveNumber);
  client->add_option("--mode", client_args.mode,
                     "Tuning mode this run measures (no-rt disables SCHED_FIFO)");
  client->add_flag("--timeseries", client_args.timeseries,
                   "Collect per-cycle RTTs");
  client->add_option("--record", client_args.record_out, "Write the run record");
  client->add_option("--hist-out", client_args.hist_out,
                     "Write histogram plot data");
  client->add_option("--timeseries-out", client_args.timeseries_out,
                     "Write time series plot data (implies --timeseries)");
  client->add_flag("--print-scenario", client_args.print_scenario,
                   "Print the effective scenario JSON and exit");
  client->callback(
      [&] { action = [&] { return cmd_client(*client, client_args); }; });

  // tune
  CLI::App* tune = app.add_subcommand("tune", "Plan, apply and verify RT tuning");
  tune->require_subcommand(1);
  TuneArgs show_args;
  CLI::App* tune_show = tune->add_subcommand("show", "Print the resolved plan");
  add_tune_options(tune_show, show_args);
  tune_show->add_flag("--commands", show_args.commands_only,
                      "Print only the shell commands the plan would run");
  tune_show->add_option("--out", show_args.out, "Write to a file instead of stdout");
  tune_show->callback(
      [&] { action = [&] { return cmd_tune_show(*tune_show, show_args); }; });

  TuneArgs apply_args;
  CLI::App* tune_apply = tune->add_subcommand("apply", "Execute the plan's steps");
  add_tune_options(tune_apply, apply_args);
  tune_apply->add_flag("--live", apply_args.live,
                       "Touch the live system (default: print the dry run)");
  tune_apply->callback(
      [&] { action = [&] { return cmd_tune_apply(*tune_apply, apply_args); }; });

  TuneArgs verify_args;
  CLI::App* tune_verify =
      tune->add_subcommand("verify", "Compare configured state with the plan");
  add_tune_options(tune_verify, verify_args);
  tune_verify->add_flag("--dry-run", verify_args.dry_run,
                        "Verify against a simulated apply instead of the system");
  tune_verify->callback(
      [&] { action = [&] { return cmd_tune_verify(*tune_verify, verify_args); }; });

  // stress
  CLI::App* stress = app.add_subcommand(
      "stress", "Background load: -c/--cpu N, -i/--io N, -m/--vm N, --vm-bytes B, "
                "-d/--hdd N, --hdd-bytes B, -t/--timeout T");
  stress->allow_extras();
  stress->callback(
      [&] { action = [&, args = stress->remaining()] { return cmd_stress(args); }; });

  // traffic
  TrafficArgs traffic_args;
  CLI::App* traffic = app.add_subcommand("traffic", "Paced best-effort UDP stream");
  traffic->add_option("--dest", traffic_args.dest, "Destination (host:port)")
      ->required();
  traffic->add_option("--bandwidth", traffic_args.bandwidth,
                      "Target bandwidth, decimal suffixes (100M = 1e8 bit/s)");
  traffic->add_option("--payload", traffic_args.payload, "Datagram payload bytes");
  traffic->add_option("--duration", traffic_args.duration,
                      "How long to send (0 = until signal)");
  traffic->add_option("--priority", traffic_args.priority, "SKB priority mark")
      ->check(CLI::Range(0, kSkbPriorityLevels - 1));
  traffic->callback([&] { action = [&] { return cmd_traffic(traffic_args); }; });

  // sink
  SinkArgs sink_args;
  CLI::App* sink = app.add_subcommand("sink", "Count received UDP bytes");
  sink->add_option("--local", sink_args.local, "Bind address (host:port)");
  sink->add_option("--duration", sink_args.duration,
                   "Stop after this long (0 = until signal)");
  sink->add_flag("--windows", sink_args.windows,
                 "Print per-second `<second> <bits> <packets>` lines");
  sink->callback([&] { action = [&] { return cmd_sink(sink_args); }; });

  // report
  CLI::App* report = app.add_subcommand("report", "Render persisted run records");
  report->require_subcommand(1);
  std::vector<std::string> table_files;
  std::string table_out;
  CLI::App* report_table =
      report->add_subcommand("table", "Result table for one tuning mode");
  report_table->add_option("records", table_files, "Run record JSON files")
      ->required()
      ->expected(-1);
  report_table->add_option("--out", table_out, "Write to a file instead of stdout");
  report_table->callback(
      [&] { action = [&] { return cmd_report_table(table_files, table_out); }; });

  std::string hist_file, hist_out;
  CLI::App* report_hist =
      report->add_subcommand("hist", "Histogram plot data from a record");
  report_hist->add_option("record", hist_file, "Run record JSON file")->required();
  report_hist->add_option("--out", hist_out, "Write to a file instead of stdout");
  report_hist->callback(
      [&] { action = [&] { return cmd_report_hist(hist_file, hist_out); }; });

  std::string ts_file, ts_out;
  CLI::App* report_ts =
      report->add_subcommand("timeseries", "Time series plot data from a record");
  report_ts->add_option("record", ts_file, "Run record JSON file")->required();
  report_ts->add_option("--out", ts_out, "Write to a file instead of stdout");
  report_ts->callback(
      [&] { action = [&] { return cmd_report_timeseries(ts_file, ts_out); }; });

  // matrix
  MatrixArgs matrix_args;
  CLI::App* matrix =
      app.add_subcommand("matrix", "Run a modes x loads benchmark matrix");
  matrix->add_option("file", matrix_args.file, "Matrix JSON file")->required();
  matrix->add_option("--output-dir", matrix_args.output_dir,
                     "Where run records are written");
  matrix->add_flag("--live", matrix_args.live,
                   "Apply tuning to the live system (default: dry run)");
  matrix->callback(
      [&] { action = [&] { return cmd_matrix(*matrix, matrix_args); }; });

  // doctor
  CLI::App* doctor =
      app.add_subcommand("doctor", "Pre-flight environment and privilege checks");
  doctor->callback([&] { action = [] { return cmd_doctor(); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::RequiredError&) {
    std::cerr << app.help();
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return kExitCapability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
