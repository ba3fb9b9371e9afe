#include "rtbench/sched.hpp"

#include <pthread.h>
#include <sched.h>
#include <sys/mman.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rtbench/errors.hpp"

namespace rtbench {

CpuSet::CpuSet(std::initializer_list<int> cpus) : CpuSet(std::vector<int>(cpus)) {}

CpuSet::CpuSet(std::vector<int> cpus) : cpus_(std::move(cpus)) {
  for (int c : cpus_) {
    if (c < 0) throw std::invalid_argument("negative CPU index");
  }
  std::sort(cpus_.begin(), cpus_.end());
  cpus_.erase(std::unique(cpus_.begin(), cpus_.end()), cpus_.end());
}

namespace {

// stoi that rejects partial parses like "1x" instead of stopping at the 'x'.
int parse_cpu_index(const std::string& text) {
  std::size_t used = 0;
  const int value = std::stoi(text, &used);
  if (used != text.size()) throw std::invalid_argument("trailing characters");
  return value;
}

}  // namespace

CpuSet CpuSet::parse(const std::string& list) {
  CpuSet out;
  std::size_t pos = 0;
  while (pos < list.size()) {
    std::size_t end = list.find(',', pos);
    if (end == std::string::npos) end = list.size();
    const std::string token = list.substr(pos, end - pos);
    if (!token.empty()) {
      const std::size_t dash = token.find('-');
      try {
        if (dash == std::string::npos) {
          out.add(parse_cpu_index(token));
        } else {
          const int lo = parse_cpu_index(token.substr(0, dash));
          const int hi = parse_cpu_index(token.substr(dash + 1));
          if (hi < lo) throw std::invalid_argument("descending range");
          for (int c = lo; c <= hi; ++c) out.add(c);
        }
      } catch (const std::exception&) {
        throw UsageError("invalid CPU list token '" + token + "' in '" + list + "'");
      }
    }
    pos = end + 1;
  }
  return out;
}

void CpuSet::add(int cpu) {
  if (cpu < 0) throw std::invalid_argument("negative CPU index");
  auto it = std::lower_bound(cpus_.begin(), cpus_.end(), cpu);
  if (it == cpus_.end() || *it != cpu) cpus_.insert(it, cpu);
}

bool CpuSet::contains(int cpu) const {
  return std::binary_search(cpus_.begin(), cpus_.end(), cpu);
}

std::string CpuSet::to_list_string() const {
  std::string out;
  std::size_t i = 0;
  while (i < cpus_.size()) {
    std::size_t j = i;
    while (j + 1 < cpus_.size() && cpus_[j + 1] == cpus_[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(cpus_[i]);
    if (j > i) {
      out += '-';
      out += std::to_string(cpus_[j]);
    }
    i = j + 1;
  }
  return out;
}

bool CpuSet::intersects(const CpuSet& other) const {
  for (int c : cpus_) {
    if (other.contains(c)) return true;
  }
  return false;
}

void RtSchedParams::validate() const {
  if (policy == Policy::fifo) {
    if (priority < 1 || priority > 99) {
      throw std::invalid_argument("fifo priority must be in 1..99");
    }
  } else if (priority != 0) {
    throw std::invalid_argument("priority requires the fifo policy");
  }
}

const char* to_string(RtSchedParams::Policy p) {
  return p == RtSchedParams::Policy::fifo ? "fifo" : "other";
}

void apply_sched_params(const RtSchedParams& params) {
  params.validate();
  if (params.lock_memory) {
    if (mlockall(MCL_CURRENT | MCL_FUTURE) != 0) {
      throw CapabilityError(std::string("mlockall failed (") + std::strerror(errno) +
                            "); raise RLIMIT_MEMLOCK or grant CAP_IPC_LOCK");
    }
  }
  if (params.policy == RtSchedParams::Policy::fifo) {
    sched_param sp{};
    sp.sched_priority = params.priority;
    if (pthread_setschedparam(pthread_self(), SCHED_FIFO, &sp) != 0) {
      throw CapabilityError(
          "cannot set SCHED_FIFO priority " + std::to_string(params.priority) +
          ": run as root, grant CAP_SYS_NICE, or raise RLIMIT_RTPRIO");
    }
  }
}

void set_cpu_affinity(const CpuSet& cpus) {
  if (cpus.empty()) throw std::invalid_argument("empty CPU affinity set");
  cpu_set_t mask;
  CPU_ZERO(&mask);
  for (int c : cpus.cpus()) CPU_SET(c, &mask);
  if (pthread_setaffinity_np(pthread_self(), sizeof(mask), &mask) != 0) {
    throw CapabilityError("cannot pin thread to CPUs " + cpus.to_list_string() +
                          ": CPU offline or affinity not permitted");
  }
}

CpuSet current_cpu_affinity() {
  cpu_set_t mask;
  CPU_ZERO(&mask);
  if (pthread_getaffinity_np(pthread_self(), sizeof(mask), &mask) != 0) {
    throw CapabilityError("cannot read current CPU affinity");
  }
  CpuSet out;
  for (int c = 0; c < CPU_SETSIZE; ++c) {
    if (CPU_ISSET(c, &mask)) out.add(c);
  }
  return out;
}

SchedSnapshot current_sched() {
  SchedSnapshot snap;
  sched_param param{};
  if (pthread_getschedparam(pthread_self(), &snap.policy, &param) != 0) {
    throw CapabilityError("cannot read current scheduler parameters");
  }
  snap.priority = param.sched_priority;
  return snap;
}

void restore_sched(const SchedSnapshot& snapshot) {
  sched_param param{};
  param.sched_priority = snapshot.priority;
  if (pthread_setschedparam(pthread_self(), snapshot.policy, &param) != 0) {
    throw CapabilityError("cannot restore scheduler parameters");
  }
}

void set_normal_sched() { restore_sched(SchedSnapshot{SCHED_OTHER, 0}); }

void join_cpuset(const std::string& cpuset_dir) {
  const std::string tasks = cpuset_dir + "/tasks";
  std::ofstream f(tasks);
  if (!f) throw CapabilityError("cannot open " + tasks);
  f << getpid() << "\n";
  f.flush();
  if (!f) throw CapabilityError("cannot join cpuset via " + tasks);
}

}  // namespace rtbench
