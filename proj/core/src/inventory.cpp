#include "rtbench/inventory.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace rtbench {

namespace {

std::optional<std::string> read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool all_digits(const std::string& s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// One interrupt-table line looks like
//   " 24:   1234   5678   IR-PCI-MSI 524288-edge   eth1-tx-0"
// The action name is the final whitespace-separated token.
std::optional<IrqInfo> parse_interrupt_line(const std::string& line) {
  const auto colon = line.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string id = strip(line.substr(0, colon));
  if (!all_digits(id)) return std::nullopt;  // NMI/LOC/... rows

  IrqInfo info;
  info.number = std::stoi(id);
  std::istringstream rest(line.substr(colon + 1));
  std::string token;
  while (rest >> token) info.name = token;
  return info;
}

}  // namespace

SystemInventory SystemInventory::detect(const std::string& proc_root,
                                        const std::string& sys_root) {
  SystemInventory inv;

  if (auto online = read_text(fs::path(sys_root) / "devices/system/cpu/online")) {
    inv.online_cpus = CpuSet::parse(strip(*online));
  }

  if (auto table = read_text(fs::path(proc_root) / "interrupts")) {
    std::istringstream lines(*table);
    std::string line;
    while (std::getline(lines, line)) {
      if (auto irq = parse_interrupt_line(line)) inv.irqs.push_back(*irq);
    }
  }

  const fs::path net_root = fs::path(sys_root) / "class/net";
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(net_root, ec)) {
    NicInfo nic;
    nic.name = entry.path().filename().string();
    const fs::path queues = entry.path() / "queues";
    std::error_code qec;
    for (const auto& q : fs::directory_iterator(queues, qec)) {
      if (q.path().filename().string().rfind("tx-", 0) == 0) ++nic.tx_queue_count;
    }
    for (const auto& irq : inv.irqs) {
      if (irq.name.find(nic.name) != std::string::npos) nic.irqs.push_back(irq);
    }
    inv.nics.push_back(std::move(nic));
  }
  std::sort(inv.nics.begin(), inv.nics.end(),
            [](const NicInfo& a, const NicInfo& b) { return a.name < b.name; });

  return inv;
}

const NicInfo* SystemInventory::find_nic(const std::string& name) const {
  for (const auto& nic : nics) {
    if (nic.name == name) return &nic;
  }
  return nullptr;
}

std::vector<IrqInfo> SystemInventory::match_irqs(const std::string& pattern) const {
  std::vector<IrqInfo> out;
  for (const auto& irq : irqs) {
    if (irq.name.find(pattern) != std::string::npos) out.push_back(irq);
  }
  return out;
}

}  // namespace rtbench
