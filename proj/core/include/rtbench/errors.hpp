#pragma once

#include <stdexcept>
#include <string>

namespace rtbench {

// Stable process exit codes, shared by the CLI and documented in the README.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,       // bad flags or argument values
  kExitCapability = 3,  // missing privilege, too few CPUs, absent device
  kExitFailure = 4,     // runtime failure (socket errors, I/O, unreadable files)
};

// Command line or input-file misuse.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// The host cannot satisfy a request (privilege, CPU count, hardware).
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// A persisted run record is malformed or violates its invariants.
class RecordError : public std::runtime_error {
 public:
  explicit RecordError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rtbench
