#include "rtbench/tuning.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rtbench/errors.hpp"

using nlohmann::json;

namespace rtbench {

namespace {

constexpr const char* kMqprioHandle = "8001";

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

int parse_int(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad ") + what + " token '" + tok + "'");
  }
}

void expect_token(const std::vector<std::string>& toks, std::size_t i,
                  const std::string& want) {
  if (i >= toks.size() || toks[i] != want) {
    throw std::invalid_argument("expected '" + want + "' at token " +
                                std::to_string(i));
  }
}

int mode_rank(TuningMode mode) { return static_cast<int>(mode); }

}  // namespace

const char* to_string(TuningMode mode) {
  switch (mode) {
    case TuningMode::no_rt: return "no-rt";
    case TuningMode::rt_normal: return "rt-normal";
    case TuningMode::rt_affinities: return "rt-affinities";
    case TuningMode::rt_isolation: return "rt-isolation";
  }
  return "?";
}

TuningMode parse_tuning_mode(const std::string& text) {
  if (text == "no-rt") return TuningMode::no_rt;
  if (text == "rt-normal") return TuningMode::rt_normal;
  if (text == "rt-affinities") return TuningMode::rt_affinities;
  if (text == "rt-isolation") return TuningMode::rt_isolation;
  throw UsageError("unknown tuning mode '" + text +
                   "' (expected no-rt, rt-normal, rt-affinities or rt-isolation)");
}

PriorityMap::PriorityMap(std::array<int, kSkbPriorityLevels> map, int num_tc,
                         std::vector<QueueSpan> queues)
    : map_(map), num_tc_(num_tc), queues_(std::move(queues)) {
  validate();
}

PriorityMap PriorityMap::rt_three_class() {
  return PriorityMap({2, 2, 1, 1, 0, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2}, 3,
                     {{1, 0}, {1, 1}, {1, 2}});
}

void PriorityMap::validate() const {
  if (num_tc_ < 1 || num_tc_ > kSkbPriorityLevels) {
    throw std::invalid_argument("traffic class count must be in 1..16");
  }
  for (int entry : map_) {
    if (entry < 0 || entry >= num_tc_) {
      throw std::invalid_argument("priority map entry outside 0..num_tc-1");
    }
  }
  if (queues_.size() != static_cast<std::size_t>(num_tc_)) {
    throw std::invalid_argument("queue layout must list one span per class");
  }
  std::vector<std::pair<int, int>> spans;  // [first, last]
  for (const auto& q : queues_) {
    if (q.count < 1 || q.offset < 0) {
      throw std::invalid_argument("queue span must have count >= 1, offset >= 0");
    }
    spans.emplace_back(q.offset, q.offset + q.count - 1);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first <= spans[i - 1].second) {
      throw std::invalid_argument("queue spans overlap");
    }
  }
}

PriorityMap::ClassAssignment PriorityMap::classify(int skb_priority) const {
  if (skb_priority < 0 || skb_priority >= kSkbPriorityLevels) {
    throw std::domain_error("SKB priority must be in 0..15");
  }
  const int tc = map_[static_cast<std::size_t>(skb_priority)];
  return {tc, queues_[static_cast<std::size_t>(tc)].offset};
}

VlanEgressMap VlanEgressMap::identity(std::string interface) {
  VlanEgressMap map;
  map.interface = std::move(interface);
  for (int p = 0; p < 8; ++p) map.pcp_of_priority[static_cast<std::size_t>(p)] = p;
  return map;
}

void VlanEgressMap::validate() const {
  if (interface.empty()) throw std::invalid_argument("vlan map needs an interface");
  for (int pcp : pcp_of_priority) {
    if (pcp < 0 || pcp > 7) throw std::invalid_argument("PCP values must be in 0..7");
  }
}

void IrqAffinityRule::validate() const {
  if (cpus.empty()) throw std::invalid_argument("IRQ rule needs a nonempty CPU set");
  if (thread_priority && (*thread_priority < 1 || *thread_priority > 99)) {
    throw std::invalid_argument("IRQ thread priority must be in 1..99");
  }
}

void CpuIsolationPlan::validate() const {
  if (isolated.empty()) throw std::invalid_argument("isolation needs >= 1 CPU");
  if (irq_default.empty()) {
    throw std::invalid_argument("isolation needs a default IRQ CPU set");
  }
  if (isolated.intersects(irq_default)) {
    throw std::invalid_argument("isolated CPUs and default IRQ CPUs must be disjoint");
  }
}

void TbfSpec::validate() const {
  if (rate_bps == 0) throw std::invalid_argument("shaper rate must be > 0");
  if (burst_bytes == 0) throw std::invalid_argument("shaper burst must be > 0");
  if (limit_bytes == 0) throw std::invalid_argument("shaper limit must be > 0");
}

void TuningPlan::validate() const {
  if (priority_mark < 0 || priority_mark > 15) {
    throw std::invalid_argument("priority mark must be in 0..15");
  }
  if (mode == TuningMode::no_rt && sched && sched->policy != RtSchedParams::Policy::other) {
    throw std::invalid_argument("no-rt plans cannot carry RT scheduler params");
  }
  if (mode_rank(mode) >= mode_rank(TuningMode::rt_affinities) && irq_rules.empty()) {
    throw std::invalid_argument(std::string(to_string(mode)) +
                                " plans need at least one IRQ rule");
  }
  if (mode == TuningMode::rt_isolation && !isolation) {
    throw std::invalid_argument("rt-isolation plans need a CPU isolation section");
  }
  if (priority_map) priority_map->validate();
  if (vlan_map) vlan_map->validate();
  if (sched) sched->validate();
  for (const auto& rule : irq_rules) rule.validate();
  if (isolation) isolation->validate();
  if (tbf) tbf->validate();
}

TuningPlan plan_for_mode(TuningMode mode, const SystemInventory& inventory,
                         const PlanOptions& options) {
  TuningPlan plan;
  plan.mode = mode;
  plan.priority_mark = options.priority_mark;

  std::string device = options.device;
  if (device.empty()) {
    for (const auto& nic : inventory.nics) {
      if (nic.name != "lo") {
        device = nic.name;
        break;
      }
    }
  }
  plan.device = device;

  if (mode_rank(mode) >= mode_rank(TuningMode::rt_normal)) {
    plan.priority_map = PriorityMap::rt_three_class();
    if (!device.empty()) {
      plan.vlan_map = VlanEgressMap::identity(
          options.vlan_interface.empty() ? device + ".2" : options.vlan_interface);
    }
    plan.sched = RtSchedParams::fifo();
  }

  if (mode_rank(mode) >= mode_rank(TuningMode::rt_affinities)) {
    const auto& online = inventory.online_cpus.cpus();
    if (online.size() < 2) {
      throw CapabilityError(std::string(to_string(mode)) +
                            " needs at least 2 online CPUs, inventory has " +
                            std::to_string(online.size()));
    }
    const int rt_cpu = options.rt_cpu ? *options.rt_cpu : online[1];
    if (!inventory.online_cpus.contains(rt_cpu)) {
      throw CapabilityError("requested RT CPU " + std::to_string(rt_cpu) +
                            " is not online");
    }
    plan.app_cpus = CpuSet{rt_cpu};

    const std::string pattern = options.rt_queue_irq_pattern.empty()
                                    ? device + "-tx-0"
                                    : options.rt_queue_irq_pattern;
    IrqAffinityRule rule;
    rule.match = pattern;
    for (const auto& irq : inventory.match_irqs(pattern)) {
      rule.irqs.push_back(irq.number);
    }
    rule.cpus = CpuSet{rt_cpu};
    rule.thread_priority = kIrqThreadPriority;
    plan.irq_rules.push_back(std::move(rule));

    if (mode == TuningMode::rt_isolation) {
      CpuIsolationPlan iso;
      iso.isolated = CpuSet{rt_cpu};
      std::vector<int> rest;
      for (int cpu : online) {
        if (cpu != rt_cpu) rest.push_back(cpu);
      }
      iso.irq_default = CpuSet(rest);
      iso.migrate_existing_tasks = true;
      const auto& rt_irqs = plan.irq_rules.front().irqs;
      for (const auto& irq : inventory.irqs) {
        if (std::find(rt_irqs.begin(), rt_irqs.end(), irq.number) == rt_irqs.end()) {
          iso.non_rt_irqs.push_back(irq.number);
        }
      }
      plan.isolation = std::move(iso);
    }
  }

  plan.validate();
  return plan;
}

// --- command grammar ---------------------------------------------------------

std::string mqprio_command(const PriorityMap& map, const std::string& device) {
  std::ostringstream out;
  out << "tc qdisc replace dev " << device << " root mqprio num_tc " << map.num_tc()
      << " map";
  for (int entry : map.entries()) out << ' ' << entry;
  out << " queues";
  for (const auto& q : map.queue_layout()) out << ' ' << q.count << '@' << q.offset;
  out << " hw 0";
  return out.str();
}

PriorityMap parse_mqprio_command(const std::string& command, std::string* device) {
  const auto toks = tokenize(command);
  std::size_t i = 0;
  for (const char* word : {"tc", "qdisc", "replace", "dev"}) expect_token(toks, i++, word);
  if (i >= toks.size()) throw std::invalid_argument("missing device token");
  if (device) *device = toks[i];
  ++i;
  for (const char* word : {"root", "mqprio", "num_tc"}) expect_token(toks, i++, word);
  if (i >= toks.size()) throw std::invalid_argument("missing num_tc value");
  const int num_tc = parse_int(toks[i++], "num_tc");
  expect_token(toks, i++, "map");
  std::array<int, kSkbPriorityLevels> entries{};
  for (auto& entry : entries) {
    if (i >= toks.size()) throw std::invalid_argument("map needs 16 entries");
    entry = parse_int(toks[i++], "map entry");
  }
  expect_token(toks, i++, "queues");
  std::vector<QueueSpan> queues;
  while (i < toks.size() && toks[i] != "hw") {
    const auto at = toks[i].find('@');
    if (at == std::string::npos) {
      throw std::invalid_argument("queue span '" + toks[i] + "' is not count@offset");
    }
    QueueSpan span;
    span.count = parse_int(toks[i].substr(0, at), "queue count");
    span.offset = parse_int(toks[i].substr(at + 1), "queue offset");
    queues.push_back(span);
    ++i;
  }
  expect_token(toks, i++, "hw");
  expect_token(toks, i++, "0");
  if (i != toks.size()) throw std::invalid_argument("trailing tokens after 'hw 0'");
  return PriorityMap(entries, num_tc, std::move(queues));
}

std::string vlan_egress_command(const VlanEgressMap& map) {
  std::ostringstream out;
  out << "ip link set " << map.interface << " type vlan egress";
  for (int p = 0; p < 8; ++p) {
    out << ' ' << p << ':' << map.pcp_of_priority[static_cast<std::size_t>(p)];
  }
  return out.str();
}

VlanEgressMap parse_vlan_egress_command(const std::string& command) {
  const auto toks = tokenize(command);
  std::size_t i = 0;
  for (const char* word : {"ip", "link", "set"}) expect_token(toks, i++, word);
  if (i >= toks.size()) throw std::invalid_argument("missing interface token");
  VlanEgressMap map;
  map.interface = toks[i++];
  for (const char* word : {"type", "vlan", "egress"}) expect_token(toks, i++, word);
  for (int p = 0; p < 8; ++p) {
    if (i >= toks.size()) throw std::invalid_argument("egress map needs 8 pairs");
    const auto colon = toks[i].find(':');
    if (colon == std::string::npos ||
        parse_int(toks[i].substr(0, colon), "egress priority") != p) {
      throw std::invalid_argument("egress pair '" + toks[i] + "' out of order");
    }
    map.pcp_of_priority[static_cast<std::size_t>(p)] =
        parse_int(toks[i].substr(colon + 1), "egress PCP");
    ++i;
  }
  if (i != toks.size()) throw std::invalid_argument("trailing tokens after egress map");
  map.validate();
  return map;
}

std::string tbf_command(const TbfSpec& tbf, const std::string& device,
                        int parent_queue) {
  tbf.validate();
  std::ostringstream out;
  out << "tc qdisc replace dev " << device << " parent " << kMqprioHandle << ':'
      << parent_queue + 1 << " tbf rate " << tbf.rate_bps << "bit burst "
      << tbf.burst_bytes << " limit " << tbf.limit_bytes;
  return out.str();
}

std::string render_qdisc_show(const PriorityMap& map) {
  std::ostringstream out;
  out << "qdisc mqprio " << kMqprioHandle << ": root tc " << map.num_tc() << " map";
  for (int entry : map.entries()) out << ' ' << entry;
  out << "\n             queues:";
  int total_queues = 0;
  for (const auto& q : map.queue_layout()) {
    out << '(' << q.offset << ':' << q.offset + q.count - 1 << ") ";
    total_queues += q.count;
  }
  // One default child per hardware queue, listed highest handle first.
  for (int queue = total_queues; queue >= 1; --queue) {
    out << "\nqdisc pfifo_fast 0: parent " << kMqprioHandle << ':' << queue
        << " bands 3 priomap 1 2 2 2 1 2 0 0 1 1 1 1 1 1 1 1";
  }
  out << '\n';
  return out.str();
}

std::optional<PriorityMap> parse_qdisc_show(const std::string& output) {
  std::istringstream lines(output);
  std::string line;
  std::optional<int> num_tc;
  std::array<int, kSkbPriorityLevels> entries{};
  std::vector<QueueSpan> queues;
  try {
    while (std::getline(lines, line)) {
      auto toks = tokenize(line);
      if (toks.size() > 2 && toks[0] == "qdisc" && toks[1] == "mqprio") {
        auto tc_it = std::find(toks.begin(), toks.end(), "tc");
        auto map_it = std::find(toks.begin(), toks.end(), "map");
        if (tc_it == toks.end() || map_it == toks.end()) return std::nullopt;
        if (tc_it + 1 == toks.end()) return std::nullopt;
        num_tc = parse_int(*(tc_it + 1), "tc count");
        ++map_it;
        for (auto& entry : entries) {
          if (map_it == toks.end()) return std::nullopt;
          entry = parse_int(*map_it++, "map entry");
        }
      } else if (line.find("queues:") != std::string::npos) {
        std::string spans = line.substr(line.find("queues:") + 7);
        std::istringstream span_in(spans);
        std::string span;
        while (span_in >> span) {
          // shape "(first:last)"
          if (span.size() < 5 || span.front() != '(' || span.back() != ')') {
            return std::nullopt;
          }
          const auto colon = span.find(':');
          if (colon == std::string::npos) return std::nullopt;
          const int first = parse_int(span.substr(1, colon - 1), "span first");
          const int last =
              parse_int(span.substr(colon + 1, span.size() - colon - 2), "span last");
          queues.push_back(QueueSpan{last - first + 1, first});
        }
      }
    }
    if (!num_tc || queues.empty()) return std::nullopt;
    return PriorityMap(entries, *num_tc, std::move(queues));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string render_vlan_show(const VlanEgressMap& map) {
  std::ostringstream out;
  out << map.interface << ": vlan egress-qos-map {";
  for (int p = 0; p < 8; ++p) {
    out << ' ' << p << ':' << map.pcp_of_priority[static_cast<std::size_t>(p)];
  }
  out << " }";
  return out.str();
}

std::optional<VlanEgressMap> parse_vlan_show(const std::string& output) {
  const auto colon = output.find(':');
  const auto open = output.find('{');
  const auto close = output.find('}');
  if (colon == std::string::npos || open == std::string::npos ||
      close == std::string::npos || close < open) {
    return std::nullopt;
  }
  VlanEgressMap map;
  map.interface = output.substr(0, colon);
  std::istringstream pairs(output.substr(open + 1, close - open - 1));
  std::string pair;
  try {
    int expected = 0;
    while (pairs >> pair) {
      const auto sep = pair.find(':');
      if (sep == std::string::npos) return std::nullopt;
      const int prio = parse_int(pair.substr(0, sep), "priority");
      if (prio != expected || prio > 7) return std::nullopt;
      map.pcp_of_priority[static_cast<std::size_t>(prio)] =
          parse_int(pair.substr(sep + 1), "PCP");
      ++expected;
    }
    if (expected != 8) return std::nullopt;
    map.validate();
    return map;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// --- JSON ---------------------------------------------------------------------

namespace {

json priority_map_to_json(const PriorityMap& map) {
  json j;
  j["num_tc"] = map.num_tc();
  j["map"] = map.entries();
  json spans = json::array();
  for (const auto& q : map.queue_layout()) {
    spans.push_back({{"count", q.count}, {"offset", q.offset}});
  }
  j["queues"] = spans;
  return j;
}

PriorityMap priority_map_from_json(const json& j) {
  std::array<int, kSkbPriorityLevels> entries{};
  const auto& raw = j.at("map");
  if (raw.size() != entries.size()) {
    throw std::invalid_argument("priority map must have 16 entries");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = raw.at(i).get<int>();
  std::vector<QueueSpan> queues;
  for (const auto& q : j.at("queues")) {
    queues.push_back(QueueSpan{q.at("count").get<int>(), q.at("offset").get<int>()});
  }
  return PriorityMap(entries, j.at("num_tc").get<int>(), std::move(queues));
}

json sched_to_json(const RtSchedParams& sched) {
  json j;
  j["policy"] = sched.policy == RtSchedParams::Policy::fifo ? "fifo" : "other";
  if (sched.policy == RtSchedParams::Policy::fifo) j["priority"] = sched.priority;
  j["lock_memory"] = sched.lock_memory;
  return j;
}

RtSchedParams sched_from_json(const json& j) {
  RtSchedParams sched;
  const std::string policy = j.at("policy").get<std::string>();
  if (policy == "fifo") {
    sched.policy = RtSchedParams::Policy::fifo;
    sched.priority = j.at("priority").get<int>();
  } else if (policy == "other") {
    sched.policy = RtSchedParams::Policy::other;
    sched.priority = 0;
  } else {
    throw std::invalid_argument("unknown scheduling policy '" + policy + "'");
  }
  sched.lock_memory = j.at("lock_memory").get<bool>();
  return sched;
}

}  // namespace

std::string TuningPlan::to_json() const {
  json j;
  j["mode"] = to_string(mode);
  j["device"] = device;
  j["priority_mark"] = priority_mark;
  if (priority_map) j["priority_map"] = priority_map_to_json(*priority_map);
  if (vlan_map) {
    j["vlan_map"] = {{"interface", vlan_map->interface},
                     {"pcp", vlan_map->pcp_of_priority}};
  }
  if (sched) j["sched"] = sched_to_json(*sched);
  if (app_cpus) j["app_cpus"] = app_cpus->to_list_string();
  if (!irq_rules.empty()) {
    json rules = json::array();
    for (const auto& rule : irq_rules) {
      json r;
      r["match"] = rule.match;
      r["irqs"] = rule.irqs;
      r["cpus"] = rule.cpus.to_list_string();
      if (rule.thread_priority) r["thread_priority"] = *rule.thread_priority;
      rules.push_back(std::move(r));
    }
    j["irq_rules"] = std::move(rules);
  }
  if (isolation) {
    j["isolation"] = {{"isolated", isolation->isolated.to_list_string()},
                      {"irq_default", isolation->irq_default.to_list_string()},
                      {"migrate_existing_tasks", isolation->migrate_existing_tasks},
                      {"non_rt_irqs", isolation->non_rt_irqs}};
  }
  if (tbf) {
    j["tbf"] = {{"rate_bps", tbf->rate_bps},
                {"burst_bytes", tbf->burst_bytes},
                {"limit_bytes", tbf->limit_bytes}};
  }
  return j.dump(2) + "\n";
}

TuningPlan TuningPlan::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TuningPlan plan;
    plan.mode = parse_tuning_mode(j.at("mode").get<std::string>());
    plan.device = j.value("device", std::string{});
    plan.priority_mark = j.value("priority_mark", kRtPriorityMark);
    if (j.contains("priority_map")) {
      plan.priority_map = priority_map_from_json(j.at("priority_map"));
    }
    if (j.contains("vlan_map")) {
      VlanEgressMap map;
      map.interface = j.at("vlan_map").at("interface").get<std::string>();
      const auto& pcp = j.at("vlan_map").at("pcp");
      if (pcp.size() != map.pcp_of_priority.size()) {
        throw std::invalid_argument("vlan map must have 8 PCP entries");
      }
      for (std::size_t i = 0; i < map.pcp_of_priority.size(); ++i) {
        map.pcp_of_priority[i] = pcp.at(i).get<int>();
      }
      plan.vlan_map = std::move(map);
    }
    if (j.contains("sched")) plan.sched = sched_from_json(j.at("sched"));
    if (j.contains("app_cpus")) {
      plan.app_cpus = CpuSet::parse(j.at("app_cpus").get<std::string>());
    }
    for (const auto& r : j.value("irq_rules", json::array())) {
      IrqAffinityRule rule;
      rule.match = r.value("match", std::string{});
      for (const auto& irq : r.value("irqs", json::array())) {
        rule.irqs.push_back(irq.get<int>());
      }
      rule.cpus = CpuSet::parse(r.at("cpus").get<std::string>());
      if (r.contains("thread_priority")) {
        rule.thread_priority = r.at("thread_priority").get<int>();
      }
      plan.irq_rules.push_back(std::move(rule));
    }
    if (j.contains("isolation")) {
      const auto& iso = j.at("isolation");
      CpuIsolationPlan plan_iso;
      plan_iso.isolated = CpuSet::parse(iso.at("isolated").get<std::string>());
      plan_iso.irq_default = CpuSet::parse(iso.at("irq_default").get<std::string>());
      plan_iso.migrate_existing_tasks = iso.value("migrate_existing_tasks", true);
      for (const auto& irq : iso.value("non_rt_irqs", json::array())) {
        plan_iso.non_rt_irqs.push_back(irq.get<int>());
      }
      plan.isolation = std::move(plan_iso);
    }
    if (j.contains("tbf")) {
      TbfSpec tbf;
      tbf.rate_bps = j.at("tbf").at("rate_bps").get<std::uint64_t>();
      tbf.burst_bytes = j.at("tbf").at("burst_bytes").get<std::uint64_t>();
      tbf.limit_bytes = j.at("tbf").at("limit_bytes").get<std::uint64_t>();
      plan.tbf = tbf;
    }
    plan.validate();
    return plan;
  } catch (const std::exception& e) {
    throw RecordError(std::string("invalid tuning plan: ") + e.what());
  }
}

}  // namespace rtbench
