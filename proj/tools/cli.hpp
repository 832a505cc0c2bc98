#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sot::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,   // numeric failure or output error
  kBadInput = 2,  // bad arguments, unreadable inputs, shape mismatches
};

/// Entry point of the `sot` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands `--config <file>` into flags. Each non-empty line not starting
/// with '#' is `key=value` and becomes `--key=value`, inserted ahead of the
/// explicit flags so that explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace sot::cli
