#include "rtbench/matrix.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rtbench/client.hpp"
#include "rtbench/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace rtbench {

namespace {

std::uint64_t unix_now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

LoadSpec load_from_json(const json& j) {
  LoadSpec load;
  load.condition = parse_load_condition(j.value("condition", std::string{"idle"}));
  if (j.contains("stress")) {
    StressSpec spec;
    spec.cpu_workers = j.at("stress").value("cpu", 0);
    spec.io_workers = j.at("stress").value("io", 0);
    spec.vm_workers = j.at("stress").value("vm", 0);
    spec.vm_bytes = j.at("stress").value("vm_bytes", spec.vm_bytes);
    spec.disk_workers = j.at("stress").value("hdd", 0);
    spec.disk_bytes = j.at("stress").value("hdd_bytes", spec.disk_bytes);
    spec.work_dir = j.at("stress").value("work_dir", spec.work_dir);
    load.stress = spec;
  }
  if (j.contains("traffic")) {
    TrafficSpec spec;
    const auto& t = j.at("traffic");
    spec.target_bandwidth_bps = t.value("bandwidth_bps", spec.target_bandwidth_bps);
    spec.payload_size = t.value("payload_size", spec.payload_size);
    if (t.contains("destination")) {
      spec.destination = Endpoint::parse(t.at("destination").get<std::string>());
    }
    spec.priority_mark = t.value("priority_mark", spec.priority_mark);
    load.traffic = spec;
  }
  // Presence invariant only; traffic destinations may still be resolved at
  // run time against the cell's local sink.
  const bool needs_stress = load.condition == LoadCondition::stress;
  const bool needs_traffic = load.condition == LoadCondition::tx_traffic ||
                             load.condition == LoadCondition::rx_traffic;
  if (needs_stress != load.stress.has_value() ||
      needs_traffic != load.traffic.has_value()) {
    throw std::invalid_argument("load '" + std::string(to_string(load.condition)) +
                                "' has the wrong embedded spec");
  }
  return load;
}

std::string cell_file_name(const MatrixCell& cell) {
  return std::string(to_string(cell.mode)) + "_" + to_string(cell.load.condition) +
         ".json";
}

// In-process load around one client run. Traffic with no destination is
// pointed at a local sink spawned here.
class CellLoad {
 public:
  explicit CellLoad(const LoadSpec& load) : load_(load) {}

  void start() {
    if (load_.condition == LoadCondition::idle) return;
    if (load_.condition == LoadCondition::stress) {
      StressSpec spec = *load_.stress;
      spec.duration_ns = 0;  // bounded by stop()
      threads_.emplace_back([this, spec] {
        set_normal_sched();  // load must never compete at RT priority
        try {
          run_stress(spec, &stop_);
        } catch (...) {
        }
      });
      return;
    }
    TrafficSpec spec = *load_.traffic;
    spec.duration_ns = 0;
    if (!spec.destination.valid()) {
      sink_ = std::make_unique<UdpSink>(Endpoint{"127.0.0.1", 0});
      sink_->bind();
      spec.destination = Endpoint{"127.0.0.1", sink_->port()};
      threads_.emplace_back([this] {
        set_normal_sched();
        sink_->run(stop_);
      });
    }
    resolved_traffic_ = spec;
    threads_.emplace_back([this, spec] {
      set_normal_sched();
      try {
        run_traffic(spec, &stop_);
      } catch (...) {
      }
    });
  }

  void stop() {
    stop_.store(true);
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  const std::optional<TrafficSpec>& resolved_traffic() const {
    return resolved_traffic_;
  }

 private:
  LoadSpec load_;
  std::atomic<bool> stop_{false};
  std::vector<std::thread> threads_;
  std::unique_ptr<UdpSink> sink_;
  std::optional<TrafficSpec> resolved_traffic_;
};

}  // namespace

void MatrixSpec::validate() const {
  if (base.role != Role::client) {
    throw std::invalid_argument("matrix base scenario must have the client role");
  }
  base.socket.validate();
  base.cycles.validate();
  if (modes.empty()) throw std::invalid_argument("matrix needs at least one mode");
  if (loads.empty()) throw std::invalid_argument("matrix needs at least one load");
  if (output_dir.empty()) throw std::invalid_argument("matrix needs an output dir");
}

std::vector<MatrixCell> MatrixSpec::cells() const {
  validate();
  std::vector<MatrixCell> out;
  for (TuningMode mode : modes) {
    for (const LoadSpec& load : loads) {
      MatrixCell cell;
      cell.mode = mode;
      cell.load = load;
      cell.record_path = output_dir + "/" + cell_file_name(cell);
      out.push_back(std::move(cell));
    }
  }
  return out;
}

MatrixSpec MatrixSpec::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MatrixSpec spec;
    if (j.contains("base")) {
      spec.base = ScenarioSpec::from_json(j.at("base").dump());
    }
    for (const auto& mode : j.at("modes")) {
      spec.modes.push_back(parse_tuning_mode(mode.get<std::string>()));
    }
    for (const auto& load : j.at("loads")) {
      spec.loads.push_back(load_from_json(load));
    }
    spec.output_dir = j.value("output_dir", spec.output_dir);
    if (j.contains("tuning")) {
      const auto& t = j.at("tuning");
      spec.plan_options.device = t.value("device", std::string{});
      spec.plan_options.vlan_interface = t.value("vlan_interface", std::string{});
      spec.plan_options.rt_queue_irq_pattern =
          t.value("rt_queue_irq_pattern", std::string{});
      if (t.contains("rt_cpu")) spec.plan_options.rt_cpu = t.at("rt_cpu").get<int>();
      spec.plan_options.priority_mark =
          t.value("priority_mark", spec.plan_options.priority_mark);
      spec.live_tuning = t.value("live", false);
    }
    spec.validate();
    return spec;
  } catch (const RecordError&) {
    throw;
  } catch (const std::exception& e) {
    throw RecordError(std::string("invalid matrix: ") + e.what());
  }
}

MatrixSpec MatrixSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open matrix file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::size_t MatrixResult::failures() const {
  std::size_t n = 0;
  for (const auto& cell : cells) {
    if (!cell.ok) ++n;
  }
  return n;
}

namespace {

void run_cell(const MatrixSpec& spec, const MatrixCell& cell,
              const SystemInventory& inventory) {
  PlanOptions options = spec.plan_options;
  options.priority_mark = spec.base.socket.priority_mark;
  const TuningPlan plan = plan_for_mode(cell.mode, inventory, options);

  const BackendPaths paths = BackendPaths::from_environment();
  DryRunBackend dry;
  LiveBackend live(paths);
  ConfigBackend& backend = spec.live_tuning ? static_cast<ConfigBackend&>(live)
                                            : static_cast<ConfigBackend&>(dry);
  const ApplyReport applied = apply(plan, backend, paths);
  for (const auto& step : applied.steps) {
    if (step.outcome == StepOutcome::failed) {
      throw std::runtime_error("tuning step failed: " + step.action.description +
                               ": " + step.detail);
    }
  }

  ScenarioSpec scenario = spec.base;
  scenario.mode = cell.mode;
  scenario.load = cell.load;
  scenario.output.record = cell.record_path;

  CellLoad load(cell.load);
  load.start();

  // run_client raises the calling thread to the plan's scheduling class and
  // may pin it; put both back so the next cell starts from a clean slate.
  const CpuSet restore_cpus = current_cpu_affinity();
  const SchedSnapshot restore_sched_state = current_sched();
  RunRecord record;
  record.started_unix_ns = unix_now_ns();
  try {
    ClientConfig config;
    config.socket = scenario.socket;
    config.cycles = scenario.cycles;
    config.payload_size = scenario.payload_size;
    config.loss_horizon_periods = scenario.loss_horizon_periods;
    config.collect_timeseries = scenario.collect_timeseries;
    if (plan.app_cpus) set_cpu_affinity(*plan.app_cpus);
    const RtSchedParams rt = plan.sched ? *plan.sched : RtSchedParams{};
    ClientResult result = run_client(config, rt);

    record.summary = result.summary;
    record.histogram = result.histogram;
    if (scenario.collect_timeseries) record.timeseries = result.timeseries;
  } catch (...) {
    load.stop();
    set_cpu_affinity(restore_cpus);
    restore_sched(restore_sched_state);
    throw;
  }
  load.stop();
  set_cpu_affinity(restore_cpus);
  restore_sched(restore_sched_state);
  record.finished_unix_ns = unix_now_ns();

  if (load.resolved_traffic()) scenario.load.traffic = load.resolved_traffic();
  record.scenario = scenario;
  record.plan = plan;
  record.environment = EnvironmentInfo::capture(plan.device);
  save_record(record, cell.record_path);
}

}  // namespace

MatrixResult run_matrix(const MatrixSpec& spec, const SystemInventory& inventory,
                        std::ostream* log) {
  spec.validate();
  fs::create_directories(spec.output_dir);

  MatrixResult result;
  const auto all = spec.cells();
  std::size_t index = 0;
  for (const MatrixCell& cell : all) {
    ++index;
    if (log) {
      *log << "cell " << index << "/" << all.size() << ": " << to_string(cell.mode)
           << " / " << to_string(cell.load.condition) << " ... " << std::flush;
    }
    CellResult outcome;
    outcome.cell = cell;
    try {
      run_cell(spec, cell, inventory);
      outcome.ok = true;
      if (log) *log << "ok -> " << cell.record_path << "\n";
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
      if (log) *log << "failed: " << e.what() << "\n";
    }
    result.cells.push_back(std::move(outcome));
  }
  return result;
}

}  // namespace rtbench
