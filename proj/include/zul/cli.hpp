#pragma once

#include <string>
#include <vector>

namespace zul {

// Exit codes: 0 success, 1 config/usage validation, 2 numerical failure or
// complexity limit, 3 failed verification check.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace zul
