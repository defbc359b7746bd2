#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vgmt {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

/// Entry point behind the `vgmt` binary. `args` excludes the program name.
/// Subcommands: train, translate, evaluate, synth, inspect.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vgmt
