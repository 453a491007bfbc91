#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace ledsim {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitContract = 2,
  kExitIo = 3,
  kExitUsage = 64,
};

/// Runs the ledgen command line. `args` excludes the program name.
int cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ledsim
