#pragma once

#include <string>
#include <vector>

namespace wclt {

/// Runs one CLI invocation. Exit codes: 0 = all checks pass, 2 = check
/// failures, 1 = execution error.
int run_cli(const std::vector<std::string>& args);

}  // namespace wclt
