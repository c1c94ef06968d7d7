#pragma once

#include <exception>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace ras::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIntegrity = 2,
  kExitUpstream = 3,
};

/// Exit code for an error escaping a command.
int exit_code_for(const std::exception& error) noexcept;

struct RunContext {
  std::function<const char*(const char*)> getenv;
  /// Polled by long-running commands (serve, mock-embedder); they return once
  /// it yields true. Defaults to SIGINT/SIGTERM.
  std::function<bool()> stop_requested;
};

/// Runs `ras` with argv-style arguments (args[0] is the program name).
/// Regular output goes to `out`; logs and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, RunContext context = {});

}  // namespace ras::cli
