#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tfbo::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNumerical = 2,
  kExitIo = 3,
};

/// Entry point of the `tfbo` executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flag names (without dashes) accepted by a subcommand, in help order.
std::vector<std::string> subcommand_flags(const std::string& subcommand);

/// run, sweep, check-grad, compare.
std::vector<std::string> subcommands();

}  // namespace tfbo::cli
