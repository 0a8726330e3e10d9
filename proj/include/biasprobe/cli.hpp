#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace biasprobe {

/// Entry point behind the biasprobe binary, separated so tests can drive the
/// real command paths. `args` excludes the program name. Returns the process
/// exit code: 0 success, 1 user/config error, 2 environment failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace biasprobe
