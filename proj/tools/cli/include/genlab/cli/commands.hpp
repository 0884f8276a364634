#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace genlab::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kNumeric = 3, kVersion = 4 };

// Entry point shared by the `genlab` binary and in-process callers. args
// excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genlab::cli
