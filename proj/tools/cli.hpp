#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mitk::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kBadParameters = 2,
  kIoFailure = 3,
};

/// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mitk::cli
