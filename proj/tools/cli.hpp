#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cpflow::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNotConverged = 2,  // diverged, step limit, or inadmissible target
  kInternalError = 3,
};

// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpflow::cli
