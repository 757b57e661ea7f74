#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cgp {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cgp
