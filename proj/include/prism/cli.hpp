#pragma once

#include <string>
#include <vector>

namespace prism {

// Full command-line front end; returns the process exit code
// (0 ok, 1 usage, 2 data error, 3 numeric failure).
int run_cli(const std::vector<std::string>& args);

} // namespace prism
