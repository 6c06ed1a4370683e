#pragma once

#include <string>
#include <vector>

namespace anderson_pi::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kNotConverged = 3,
  kDiverged = 4,
  kBoundFailure = 5,
};

// args excludes the program name. Output goes to stdout/stderr.
int run_cli(std::vector<std::string> args);

// "stable-aa:m=5,eta=0.1" -> scheme plus overrides; throws ParameterError.
struct SchemeSpec {
  std::string text;
  std::string scheme;
  std::vector<std::pair<std::string, std::string>> overrides;
};
SchemeSpec parse_scheme_spec(const std::string& text);

// Expands `--config file.json` into flags placed right after the subcommand.
// Flags already present on the command line win.
std::vector<std::string> merge_config_file(std::vector<std::string> args);

}  // namespace anderson_pi::cli
